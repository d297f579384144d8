"""Exact VCG over the full block space.

Exponential-time ground truth for small instances: enumerates every ordered
subset of bundles, picks the total-bid maximizer, and charges each bundle
its externality via the refund rule. Used to cross-check the default
algorithm and the mechanism's refund logic; refuses instances past the size
cap rather than approximating.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterator, Mapping, Optional

from .model import (
    Block,
    CoinbaseLabel,
    as_bundle_map,
    block_bids,
    one_time_label,
)

DEFAULT_OMEGA_LIMIT = 8


class OracleSizeError(ValueError):
    """The instance is too large for exact enumeration."""


@dataclass(frozen=True)
class VcgOutcome:
    winner: Block
    total_bid: float
    charges: dict
    refunds: dict
    proposer_revenue: float


def full_omega(bundles, limit: int = DEFAULT_OMEGA_LIMIT) -> Iterator[Block]:
    """Every ordered subset of the bundle set, exactly once, in canonical
    order (sizes ascending, ids ascending, permutations lexicographic)."""
    ids = sorted(as_bundle_map(bundles))
    if len(ids) > limit:
        raise OracleSizeError(
            f"refusing exact enumeration of {len(ids)} bundles (limit {limit}); "
            "the oracle never approximates"
        )
    for size in range(len(ids) + 1):
        yield from permutations(ids, size)


def vcg_outcome(
    bundles,
    coinbase: Optional[CoinbaseLabel] = None,
    bids: Optional[Mapping] = None,
    seed: int = 0,
    limit: int = DEFAULT_OMEGA_LIMIT,
) -> VcgOutcome:
    """Run the exact mechanism: winner, per-bundle charges and refunds, and
    the residual transferred to the proposer.

    The refund to bundle i is the block's total bid minus the best total the
    others could reach with i's bid zeroed, maximized over the same full
    block space. One enumeration pass computes the winner and every
    counterfactual maximum simultaneously.
    """
    by_id = as_bundle_map(bundles)
    if coinbase is None:
        coinbase = one_time_label(seed)
    ids = sorted(by_id)

    best_block: Optional[Block] = None
    best_total = 0.0
    best_without = {i: 0.0 for i in ids}
    for block in full_omega(by_id, limit):
        values = block_bids(block, by_id, coinbase, bids)
        total = sum(values.values())
        if best_block is None or total > best_total:
            best_block, best_total = block, total
        for i in ids:
            without = total - values.get(i, 0.0)
            if without > best_without[i]:
                best_without[i] = without

    winner_values = block_bids(best_block, by_id, coinbase, bids)
    charges = {i: winner_values.get(i, 0.0) for i in ids}
    refunds = {i: best_total - best_without[i] for i in ids}
    proposer = sum(charges[i] - refunds[i] for i in ids)
    return VcgOutcome(best_block, best_total, charges, refunds, proposer)
