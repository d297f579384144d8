"""The full block-building mechanism.

Conflict-free bundles are set aside first and appended to whatever block
wins; they are always refunded their own bid, so their net payment is zero.
The default algorithm runs on the remaining core under a one-time coinbase
label and fixes every searcher refund. Builder algorithms then compete on
the same core; the best builder bid faces a second-price rule with the
default block's value as the reserve. Searcher refunds are identical no
matter which side wins.

An alternative refund rule driven by builder-reported counterfactual bids is
also provided. It is deliberately vulnerable to builder-searcher collusion
and exists only so the demos can exhibit the exploit; `run_mechanism` never
uses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .baselines import greedy_by_bid, greedy_by_density
from .conflict import conflict_free_set, get_conflict_groups
from .default_algo import block_building, counterfactual_blocks
from .model import (
    Block,
    BuilderSpec,
    CoinbaseLabel,
    Scenario,
    as_bundle_map,
    block_bids,
    block_total_bid,
    builder_label,
    one_time_label,
    ordered_map,
    validate_builder_block,
)


class MechanismError(ValueError):
    pass


@dataclass(frozen=True)
class BuilderEnv:
    """Per-run context handed to a builder algorithm."""

    label: CoinbaseLabel
    k_cutoff: int
    seed: int


class BuilderAlgorithm:
    """A competing block producer.

    `produce` returns a candidate block over the given bundles plus the bid
    the builder is willing to pay if its block is selected. Implementations
    must be pure functions of their inputs.
    """

    name = "abstract"

    def produce(self, bundles, bids, env: BuilderEnv) -> tuple:
        raise NotImplementedError


class CopyDefaultBuilder(BuilderAlgorithm):
    """Runs the default algorithm under its own label and bids truthfully."""

    name = "copy-default"

    def produce(self, bundles, bids, env):
        block = block_building(bundles, env.k_cutoff, env.seed, env.label, bids)
        return block, block_total_bid(block, bundles, env.label, bids)


class GreedyBidBuilder(BuilderAlgorithm):
    name = "greedy-bid"

    def produce(self, bundles, bids, env):
        block = greedy_by_bid(bundles, env.label, bids)
        return block, block_total_bid(block, bundles, env.label, bids)


class GreedyDensityBuilder(BuilderAlgorithm):
    name = "greedy-density"

    def produce(self, bundles, bids, env):
        block = greedy_by_density(bundles, env.label, bids)
        return block, block_total_bid(block, bundles, env.label, bids)


class EmptyBuilder(BuilderAlgorithm):
    """Dominated stub: empty block, zero bid. Can never beat the default."""

    name = "empty"

    def produce(self, bundles, bids, env):
        return (), 0.0


class HalfDefaultBuilder(BuilderAlgorithm):
    """Dominated stub: the default block at half its value."""

    name = "half-default"

    def produce(self, bundles, bids, env):
        block = block_building(bundles, env.k_cutoff, env.seed, env.label, bids)
        return block, block_total_bid(block, bundles, env.label, bids) / 2.0


class ConstantBidBuilder(BuilderAlgorithm):
    """Greedy block with a fixed bid, regardless of the block's worth."""

    name = "constant-bid"

    def __init__(self, bid: float = 0.0):
        self.bid = float(bid)

    def produce(self, bundles, bids, env):
        return greedy_by_bid(bundles, env.label, bids), self.bid


class HashExtremeBuilder(BuilderAlgorithm):
    """Includes only the bundle whose first tx hash is smallest/largest."""

    def __init__(self, largest: bool):
        self.largest = largest
        self.name = "hash-max" if largest else "hash-min"

    def produce(self, bundles, bids, env):
        by_id = as_bundle_map(bundles)
        if not by_id:
            return (), 0.0
        pick = (max if self.largest else min)(
            by_id, key=lambda i: (by_id[i].txs[0].tx_hash, i)
        )
        block = (pick,)
        return block, block_total_bid(block, by_id, env.label, bids)


BUILDER_REGISTRY = {
    "copy-default": lambda params: CopyDefaultBuilder(),
    "greedy-bid": lambda params: GreedyBidBuilder(),
    "greedy-density": lambda params: GreedyDensityBuilder(),
    "empty": lambda params: EmptyBuilder(),
    "half-default": lambda params: HalfDefaultBuilder(),
    "constant-bid": lambda params: ConstantBidBuilder(params.get("bid", 0.0)),
    "hash-min": lambda params: HashExtremeBuilder(largest=False),
    "hash-max": lambda params: HashExtremeBuilder(largest=True),
}


def instantiate_builders(specs: Sequence[BuilderSpec]) -> list:
    out = []
    for spec in specs:
        factory = BUILDER_REGISTRY.get(spec.name)
        if factory is None:
            raise MechanismError(f"unknown builder algorithm '{spec.name}'")
        out.append(factory(dict(spec.params)))
    return out


@dataclass(frozen=True)
class LedgerEntry:
    charge: float
    refund: float

    @property
    def net(self) -> float:
        return self.charge - self.refund


@dataclass(frozen=True)
class BuilderEntry:
    payment: float
    refund: float
    block: Block
    bid: float
    disqualified: bool = False


@dataclass(frozen=True)
class MechanismOutcome:
    final_block: Block
    final_coinbase: CoinbaseLabel
    winning_builder: Optional[int]  # None when the default algorithm wins
    beta0: float
    beta_star: float
    beta_prime: float
    default_block: Block
    conflict_free: frozenset
    searcher_ledger: dict  # bundle id -> LedgerEntry
    builder_ledger: dict  # builder index -> BuilderEntry
    proposer_revenue: float

    @property
    def total_inflow(self) -> float:
        """Everything the mechanism collects: searcher charges in the
        default-wins case, the winning builder's payment otherwise."""
        if self.winning_builder is None:
            return sum(e.charge for e in self.searcher_ledger.values())
        return sum(e.payment for e in self.builder_ledger.values())

    @property
    def total_outflow(self) -> float:
        return (
            sum(e.refund for e in self.searcher_ledger.values())
            + sum(e.refund for e in self.builder_ledger.values())
            + self.proposer_revenue
        )


def refund_default(
    i: int,
    o_star: Block,
    o_minus_i: Block,
    bundles,
    coinbase: CoinbaseLabel,
    bids: Optional[Mapping] = None,
) -> float:
    """Refund fixed by the default run: total bid of the default block minus
    what the others collect in the counterfactual block built with i's bid
    zeroed. Non-negative, and never more than i's own bid in the block."""
    by_id = as_bundle_map(bundles)
    if i not in by_id:
        raise MechanismError(
            f"bundle {i} is not in the core set; conflict-free bundles are "
            "refunded their own bid, not through this rule"
        )
    total = block_total_bid(o_star, by_id, coinbase, bids)
    others = block_bids(o_minus_i, by_id, coinbase, bids)
    others_total = sum(v for j, v in others.items() if j != i)
    return total - others_total


def alternative_refund(i: int, beta_star, beta_minus: Mapping, beta0, beta_prime):
    """Refund derived from the winning builder's self-reported counterfactual
    bids (the marginal weight of bundle i is beta_star - beta_minus[i]).

    Weights are paid outright while their sum fits under max(beta0,
    beta_prime); past the cap they are scaled down proportionally, which
    keeps every refund non-negative and the total within the cap. Works for
    any numeric type with exact arithmetic (e.g. Fraction).

    Deliberately vulnerable: a colluding builder can fabricate beta_minus to
    inflate one bundle's weight. Demo use only.
    """
    weights = {j: max(0 * beta_star, beta_star - bm) for j, bm in beta_minus.items()}
    cap = max(beta0, beta_prime)
    total = sum(weights.values())
    if total <= cap:
        return weights[i]
    return weights[i] * cap / total


def _append_conflict_free(core_block: Block, free_ids, bundles) -> Block:
    by_id = as_bundle_map(bundles)
    tail = sorted(free_ids, key=lambda i: (by_id[i].txs[0].tx_hash, i))
    return tuple(core_block) + tuple(tail)


def run_mechanism(
    scenario: Scenario,
    bids: Optional[Mapping] = None,
    builders: Optional[Sequence[BuilderAlgorithm]] = None,
    threads: int = 1,
) -> MechanismOutcome:
    """Execute the full mechanism on a scenario.

    `bids` optionally overrides bundle bid functions by id (deviation
    sweeps); `builders` optionally replaces the scenario's registry-named
    builder list with prebuilt algorithm objects.
    """
    by_id = scenario.bundle_map()
    if builders is None:
        builders = instantiate_builders(scenario.builders)

    groups = get_conflict_groups(by_id)
    free = conflict_free_set(groups)
    core = {i: b for i, b in by_id.items() if i not in free}

    # Phase 1: default run under a fresh one-time label; refunds are fixed
    # here and never revisited.
    label0 = one_time_label(scenario.seed)
    o_star = block_building(
        core, scenario.k_cutoff, scenario.seed, label0, bids, threads=threads
    )
    beta0 = block_total_bid(o_star, core, label0, bids)
    o_minus = counterfactual_blocks(
        core, scenario.k_cutoff, scenario.seed, label0, bids, threads=threads
    )
    refunds = {
        i: refund_default(i, o_star, o_minus[i], core, label0, bids) for i in core
    }

    # Phase 2: builder competition on the same core, each under its own
    # fixed label, isolated from one another.
    def run_builder(item):
        index, algo = item
        env = BuilderEnv(builder_label(index), scenario.k_cutoff, scenario.seed)
        try:
            block, beta = algo.produce(core, bids, env)
        except Exception:
            return index, (), 0.0, True
        block = tuple(block)
        bad = (
            validate_builder_block(block, core) is not None
            or not isinstance(beta, (int, float))
            or not math.isfinite(beta)
            or beta < 0
        )
        if bad:
            return index, (), 0.0, True
        return index, block, float(beta), False

    produced = ordered_map(run_builder, list(enumerate(builders)), threads)

    beta_star, winner_index = 0.0, None
    for index, block, beta, disqualified in produced:
        if disqualified:
            continue
        if winner_index is None or beta > beta_star:
            beta_star, winner_index = beta, index
    beta_prime = 0.0
    for index, block, beta, disqualified in produced:
        if disqualified or index == winner_index:
            continue
        beta_prime = max(beta_prime, beta)

    entries = {index: (block, beta, dq) for index, block, beta, dq in produced}

    if winner_index is None or beta0 >= beta_star:
        # Default algorithm wins (ties included). Charges are evaluated on
        # the final block under the default run's label; appending the
        # conflict-free tail cannot change any core bundle's context.
        final = _append_conflict_free(o_star, free, by_id)
        charges = block_bids(final, by_id, label0, bids)
        searcher_ledger = {
            i: LedgerEntry(
                charge=charges.get(i, 0.0),
                refund=charges.get(i, 0.0) if i in free else refunds[i],
            )
            for i in by_id
        }
        builder_ledger = {
            index: BuilderEntry(0.0, 0.0, block, beta, dq)
            for index, (block, beta, dq) in entries.items()
        }
        proposer = beta0 - sum(refunds.values())
        return MechanismOutcome(
            final_block=final,
            final_coinbase=label0,
            winning_builder=None,
            beta0=beta0,
            beta_star=beta_star,
            beta_prime=beta_prime,
            default_block=o_star,
            conflict_free=free,
            searcher_ledger=searcher_ledger,
            builder_ledger=builder_ledger,
            proposer_revenue=proposer,
        )

    # A builder wins: searchers pay their bids in the final block to the
    # builder, the builder pays its bid plus the conflict-free tail's bids
    # to the mechanism and is refunded the second-price surplus. Core
    # refunds are the phase-1 values, unchanged.
    win_block, win_beta, _ = entries[winner_index]
    label_w = builder_label(winner_index)
    final = _append_conflict_free(win_block, free, by_id)
    charges = block_bids(final, by_id, label_w, bids)
    free_total = sum(charges.get(i, 0.0) for i in free)
    searcher_ledger = {
        i: LedgerEntry(
            charge=charges.get(i, 0.0),
            refund=charges.get(i, 0.0) if i in free else refunds[i],
        )
        for i in by_id
    }
    builder_ledger = {
        index: BuilderEntry(
            payment=win_beta + free_total if index == winner_index else 0.0,
            refund=beta_star - max(beta0, beta_prime)
            if index == winner_index
            else 0.0,
            block=block,
            bid=beta,
            disqualified=dq,
        )
        for index, (block, beta, dq) in entries.items()
    }
    proposer = max(beta0, beta_prime) - sum(refunds.values())
    return MechanismOutcome(
        final_block=final,
        final_coinbase=label_w,
        winning_builder=winner_index,
        beta0=beta0,
        beta_star=beta_star,
        beta_prime=beta_prime,
        default_block=o_star,
        conflict_free=free,
        searcher_ledger=searcher_ledger,
        builder_ledger=builder_ledger,
        proposer_revenue=proposer,
    )


def searcher_utility(
    i: int, outcome: MechanismOutcome, bundles, valuation=None
) -> float:
    """Realized value in the final block, minus the net payment."""
    by_id = as_bundle_map(bundles)
    if valuation is None:
        valuation = by_id[i].valuation
    values = block_bids(
        outcome.final_block, by_id, outcome.final_coinbase, {i: valuation}
    )
    entry = outcome.searcher_ledger[i]
    return values.get(i, 0.0) - entry.charge + entry.refund


def builder_utility(j: int, outcome: MechanismOutcome) -> float:
    """Collected searcher payments minus net payment for the winner; losers
    pay and receive nothing."""
    if outcome.winning_builder != j:
        return 0.0
    collected = sum(e.charge for e in outcome.searcher_ledger.values())
    entry = outcome.builder_ledger[j]
    return collected - entry.payment + entry.refund
