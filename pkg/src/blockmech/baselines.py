"""Greedy reference builders and the value-comparison harness.

The two greedies are declared stand-ins for production orderings whose exact
rules are not public: one keyed on raw bid, one on bid density (bid/weight).
Both append the best remaining bundle evaluated in the current partial
block's context and stop when nothing adds positive value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Optional

from .default_algo import block_building
from .model import (
    Block,
    CoinbaseLabel,
    ExecutionContext,
    Scenario,
    as_bundle_map,
    block_total_bid,
    evaluate_bid,
    one_time_label,
)
from .oracle import DEFAULT_OMEGA_LIMIT, vcg_outcome


def _greedy(bundles, coinbase, bids, key_weight) -> Block:
    by_id = as_bundle_map(bundles)
    remaining = sorted(by_id)
    placed = []  # (id, effective writes)
    block = []
    while remaining:
        best_id = None
        best_bid = 0.0
        best_key = 0.0
        for i in remaining:
            b = by_id[i]
            preds = tuple(j for j, w in placed if w & b.footprint)
            ctx = ExecutionContext(preds, coinbase)
            fn = bids.get(i) if bids is not None else None
            value = evaluate_bid(b, ctx, fn)
            key = value / key_weight(b)
            if best_id is None or key > best_key:
                best_id, best_bid, best_key = i, value, key
        if best_bid <= 0.0:
            break
        block.append(best_id)
        placed.append((best_id, by_id[best_id].effective_writes(coinbase)))
        remaining.remove(best_id)
    return tuple(block)


def greedy_by_bid(
    bundles, coinbase: CoinbaseLabel, bids: Optional[Mapping] = None
) -> Block:
    """Append the highest-bidding remaining bundle (ties by id)."""
    return _greedy(bundles, coinbase, bids, lambda b: 1.0)


def greedy_by_density(
    bundles, coinbase: CoinbaseLabel, bids: Optional[Mapping] = None
) -> Block:
    """Append the remaining bundle with the highest bid per unit weight."""
    by_id = as_bundle_map(bundles)
    for b in by_id.values():
        if b.weight <= 0:
            raise ValueError(f"bundle {b.id}: density ordering needs weight > 0")
    return _greedy(bundles, coinbase, bids, lambda b: float(b.weight))


@dataclass(frozen=True)
class ComparisonReport:
    values: dict  # algorithm name -> block value
    runtimes: dict  # algorithm name -> seconds (informational only)
    best_value: float
    default_is_best: bool
    gap_absolute: float
    gap_relative: float


def compare_algorithms(
    scenario: Scenario,
    oracle_limit: int = DEFAULT_OMEGA_LIMIT,
    threads: int = 1,
) -> ComparisonReport:
    """Run the default algorithm, both greedies, and (when the instance is
    small enough) the exact oracle, all valued under one common label."""
    bundles = scenario.bundle_map()
    coinbase = one_time_label(scenario.seed)

    def timed(fn):
        t0 = time.perf_counter()
        block = fn()
        return block, time.perf_counter() - t0

    values: dict = {}
    runtimes: dict = {}
    runs = {
        "default": lambda: block_building(
            bundles, scenario.k_cutoff, scenario.seed, coinbase, threads=threads
        ),
        "greedy-bid": lambda: greedy_by_bid(bundles, coinbase),
        "greedy-density": lambda: greedy_by_density(bundles, coinbase),
    }
    for name, fn in runs.items():
        block, elapsed = timed(fn)
        values[name] = block_total_bid(block, bundles, coinbase)
        runtimes[name] = elapsed
    if len(bundles) <= oracle_limit:
        t0 = time.perf_counter()
        values["oracle"] = vcg_outcome(
            bundles, coinbase, limit=oracle_limit
        ).total_bid
        runtimes["oracle"] = time.perf_counter() - t0

    best = max(values.values()) if values else 0.0
    default_value = values["default"]
    gap = best - default_value
    return ComparisonReport(
        values=values,
        runtimes=runtimes,
        best_value=best,
        default_is_best=default_value >= best,
        gap_absolute=gap,
        gap_relative=(gap / best) if best > 0 else 0.0,
    )
