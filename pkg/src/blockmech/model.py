"""Domain model: bundles, bid functions, blocks, execution contexts.

Real chain execution is abstracted away. What a bundle "sees" when a block
runs is reduced to the ordered sequence of conflicting bundles placed before
it plus the coinbase label of the run; a bid function maps that context to a
non-negative payment. All types are immutable after construction, so every
operation in the package is a pure function and safe to share across threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

# Account-balance conflicts share the key space with contract storage via a
# reserved slot value.
BALANCE_SLOT = "__balance__"

# A block is an ordered sequence of distinct bundle ids.
Block = tuple


class ModelError(ValueError):
    """Malformed domain object or misuse of a model operation."""


@dataclass(frozen=True, order=True)
class StorageKey:
    """One storage location: a contract address plus a slot identifier."""

    address: str
    slot: str

    @classmethod
    def balance(cls, address: str) -> "StorageKey":
        return cls(address, BALANCE_SLOT)


@dataclass(frozen=True, order=True)
class TxRef:
    tx_hash: str
    target: str


@dataclass(frozen=True)
class CoinbaseLabel:
    """Fee-recipient identifier visible to executing bundles.

    Builder algorithms run under fixed labels; a default-algorithm run draws
    a one-time label derived from the scenario seed, which lives outside the
    builder namespace so no gated bundle can match it.
    """

    value: str


def builder_label(index: int) -> CoinbaseLabel:
    return CoinbaseLabel(f"builder-{index}")


def one_time_label(seed: int) -> CoinbaseLabel:
    digest = hashlib.blake2b(f"one-time:{seed}".encode(), digest_size=8).hexdigest()
    return CoinbaseLabel(f"onetime-{digest}")


@dataclass(frozen=True)
class ExecutionContext:
    """What a bundle observes: conflicting predecessors, in order, and the
    coinbase label of the run."""

    predecessors: tuple
    coinbase: CoinbaseLabel

    @property
    def signature(self) -> str:
        """Canonical encoding of the predecessor sequence ("" when empty)."""
        return ",".join(str(i) for i in self.predecessors)


@dataclass(frozen=True)
class ConstantBid:
    """Fixed tip: the same payment in every execution context."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ModelError(f"negative bid value {self.value}")

    def evaluate(self, ctx: ExecutionContext) -> float:
        return self.value

    def scaled(self, factor: float) -> "ConstantBid":
        return ConstantBid(self.value * factor)


@dataclass(frozen=True, eq=True)
class TableBid:
    """Context-dependent payment: exact-match lookup on the canonical
    predecessor-sequence signature, falling back to a default."""

    entries: Mapping[str, float]
    default: float

    def __post_init__(self):
        if self.default < 0 or any(v < 0 for v in self.entries.values()):
            raise ModelError("negative bid value in table")

    def evaluate(self, ctx: ExecutionContext) -> float:
        return self.entries.get(ctx.signature, self.default)

    def scaled(self, factor: float) -> "TableBid":
        return TableBid(
            {k: v * factor for k, v in self.entries.items()}, self.default * factor
        )


@dataclass(frozen=True)
class GatedBid:
    """Pays only when the run's coinbase matches the target label."""

    target: CoinbaseLabel
    inner: "BidFunction"

    def evaluate(self, ctx: ExecutionContext) -> float:
        if ctx.coinbase != self.target:
            return 0.0
        return self.inner.evaluate(ctx)

    def scaled(self, factor: float) -> "GatedBid":
        return GatedBid(self.target, self.inner.scaled(factor))


BidFunction = Union[ConstantBid, TableBid, GatedBid]

ZERO_BID = ConstantBid(0.0)


def exclusive_bid(value: float) -> TableBid:
    """Winner-take-all shape: pays `value` at the head of the block and
    nothing once any conflicting bundle precedes it."""
    return TableBid({"": float(value)}, 0.0)


@dataclass(frozen=True)
class Bundle:
    """A searcher's atomic order.

    `reads`/`writes` are the declared storage footprint; `weight` is abstract
    gas. A set `gate` makes the bundle a no-op (bids zero, performs no
    writes) under any coinbase label other than the gate.
    """

    id: int
    txs: tuple
    reads: frozenset = frozenset()
    writes: frozenset = frozenset()
    weight: int = 1
    gate: Optional[CoinbaseLabel] = None
    bid: BidFunction = ZERO_BID
    valuation: BidFunction = ZERO_BID
    footprint: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.txs:
            raise ModelError(f"bundle {self.id}: txs must be non-empty")
        if self.weight < 0:
            raise ModelError(f"bundle {self.id}: negative weight")
        object.__setattr__(self, "footprint", self.reads | self.writes)

    def effective_writes(self, coinbase: CoinbaseLabel) -> frozenset:
        if self.gate is not None and self.gate != coinbase:
            return frozenset()
        return self.writes


@dataclass(frozen=True)
class BuilderSpec:
    """Scenario-file descriptor: a registry name plus optional parameters."""

    name: str
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    bundles: tuple
    builders: tuple = ()
    k_cutoff: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.k_cutoff < 1:
            raise ModelError(f"k_cutoff must be >= 1, got {self.k_cutoff}")
        object.__setattr__(
            self, "bundles", tuple(sorted(self.bundles, key=lambda b: b.id))
        )
        ids = [b.id for b in self.bundles]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ModelError(f"duplicate bundle id {dup}")
        # The same tx hash may appear in several bundles (a shared victim tx),
        # but it must always denote the same transaction.
        seen: dict = {}
        for b in self.bundles:
            for tx in b.txs:
                if seen.setdefault(tx.tx_hash, tx.target) != tx.target:
                    raise ModelError(
                        f"tx hash {tx.tx_hash} maps to conflicting targets"
                    )

    def bundle_map(self) -> dict:
        return {b.id: b for b in self.bundles}


def as_bundle_map(bundles) -> dict:
    """Accept an iterable of bundles or an id->Bundle mapping.

    An existing dict is returned as-is (callers treat it as read-only).
    """
    if isinstance(bundles, dict):
        return bundles
    if isinstance(bundles, Mapping):
        return dict(bundles)
    return {b.id: b for b in bundles}


def canonical_context(
    block: Block, subject: int, bundles, coinbase: CoinbaseLabel
) -> ExecutionContext:
    """Context the subject bundle executes in within `block`.

    Predecessors are the ids placed before the subject whose effective write
    set intersects the subject's footprint, in block order. Appending bundles
    after the subject can never change the result.
    """
    by_id = as_bundle_map(bundles)
    if subject not in block:
        raise ModelError(f"bundle {subject} not included in block")
    subj = by_id[subject]
    footprint = subj.footprint
    preds = []
    for j in block:
        if j == subject:
            break
        if by_id[j].effective_writes(coinbase) & footprint:
            preds.append(j)
    return ExecutionContext(tuple(preds), coinbase)


def evaluate_bid(
    bundle: Bundle, ctx: ExecutionContext, fn: Optional[BidFunction] = None
) -> float:
    """Bundle's payment in the given context (0 when it no-ops).

    `fn` overrides the bundle's declared bid function; the bundle-level gate
    applies either way.
    """
    if bundle.gate is not None and bundle.gate != ctx.coinbase:
        return 0.0
    if fn is None:
        fn = bundle.bid
    return fn.evaluate(ctx)


def block_bids(
    block: Block,
    bundles,
    coinbase: CoinbaseLabel,
    bids: Optional[Mapping[int, BidFunction]] = None,
) -> dict:
    """Per-included-bundle bid values, evaluated in one pass over the block.

    `bids` optionally overrides bid functions per bundle id; ids absent from
    the override use their declared bid.
    """
    by_id = as_bundle_map(bundles)
    violation = validate_builder_block(block, by_id)
    if violation is not None:
        raise ModelError(str(violation))
    values: dict = {}
    placed = []  # (id, effective writes) for bundles already in the block
    for i in block:
        b = by_id[i]
        footprint = b.footprint
        preds = tuple(j for j, w in placed if w & footprint)
        ctx = ExecutionContext(preds, coinbase)
        fn = bids.get(i) if bids is not None else None
        values[i] = evaluate_bid(b, ctx, fn)
        placed.append((i, b.effective_writes(coinbase)))
    return values


def block_total_bid(
    block: Block,
    bundles,
    coinbase: CoinbaseLabel,
    bids: Optional[Mapping[int, BidFunction]] = None,
) -> float:
    """Total bid of a block; bundles outside the block contribute 0."""
    return sum(block_bids(block, bundles, coinbase, bids).values())


@dataclass(frozen=True)
class BlockViolation:
    kind: str  # "duplicate" | "foreign"
    bundle_id: int

    def __str__(self) -> str:
        if self.kind == "duplicate":
            return f"duplicate bundle id {self.bundle_id} in block"
        return f"foreign bundle id {self.bundle_id} not in input set"


def validate_builder_block(block: Block, bundles) -> Optional[BlockViolation]:
    """A valid block is a duplicate-free subset of the input ids; returns the
    first offending id otherwise."""
    known = set(as_bundle_map(bundles))
    seen = set()
    for i in block:
        if i in seen:
            return BlockViolation("duplicate", i)
        if i not in known:
            return BlockViolation("foreign", i)
        seen.add(i)
    return None


def ordered_map(fn, items: Iterable, threads: int = 1) -> list:
    """Map preserving input order; `threads > 1` uses a worker pool.

    Collection order is the submission order, never completion order, so the
    result is identical for any thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
