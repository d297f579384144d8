"""Built-in fixture scenarios used by the demos, docs, and tests.

JSON copies of these ship under fixtures/ at the repo root; a test keeps the
files and these constructors in sync.
"""

from __future__ import annotations

from .model import (
    Bundle,
    BuilderSpec,
    ConstantBid,
    Scenario,
    StorageKey,
    TableBid,
    TxRef,
    exclusive_bid,
)

_POOL = StorageKey("0xamm", "reserves")


def example2_scenario() -> Scenario:
    """Two position-dependent bundles contesting one pool.

    Bundle 1 pays 40 at the head of the block and 100 after bundle 2;
    bundle 2 pays 50 at the head and 80 after bundle 1. The best block is
    [2, 1] worth 150, with refunds 70 and 50 and 30 left for the proposer.
    """
    bundle1 = Bundle(
        id=1,
        txs=(TxRef("0xa1", "0xamm"),),
        writes=frozenset({_POOL}),
        bid=TableBid({"2": 100.0}, 40.0),
        valuation=TableBid({"2": 100.0}, 40.0),
    )
    bundle2 = Bundle(
        id=2,
        txs=(TxRef("0xb2", "0xamm"),),
        writes=frozenset({_POOL}),
        bid=TableBid({"1": 80.0}, 50.0),
        valuation=TableBid({"1": 80.0}, 50.0),
    )
    return Scenario(bundles=(bundle1, bundle2), k_cutoff=8, seed=42)


def deficit_scenario() -> Scenario:
    """Two mutually exclusive transactions, bids 100 and 1, plus one builder
    that always picks the smallest-hash tx and one that picks the largest.

    A mechanism that insisted on exact marginal refunds AND second-price
    builder charging would refund 99 while collecting 1 here; the real
    mechanism stays balanced on the same input.
    """
    contested = StorageKey("0xdex", "slot0")
    tx1 = Bundle(
        id=1,
        txs=(TxRef("0x01", "0xdex"),),
        writes=frozenset({contested}),
        bid=exclusive_bid(100.0),
        valuation=exclusive_bid(100.0),
    )
    tx2 = Bundle(
        id=2,
        txs=(TxRef("0xff", "0xdex"),),
        writes=frozenset({contested}),
        bid=exclusive_bid(1.0),
        valuation=exclusive_bid(1.0),
    )
    return Scenario(
        bundles=(tx1, tx2),
        builders=(BuilderSpec("hash-min"), BuilderSpec("hash-max")),
        k_cutoff=8,
        seed=7,
    )


def collusion_scenario() -> Scenario:
    """Example-2 core plus one dominated honest builder, so the default
    strictly outperforms every registered algorithm. The colluding builder
    is injected by the demo, not by the scenario."""
    base = example2_scenario()
    return Scenario(
        bundles=base.bundles,
        builders=(BuilderSpec("empty"),),
        k_cutoff=base.k_cutoff,
        seed=base.seed,
    )


def sybil_fixture() -> tuple:
    """(scenario, subject id, replacement parts) for the refund-splitting
    demonstration.

    The subject writes two keys and is pivotal against one competitor; the
    split halves cover one key each, stay compatible with each other, and
    bid 50 apiece, together matching the original bundle's 100.
    """
    k1 = StorageKey("0xpool", "a")
    k2 = StorageKey("0xpool", "b")
    subject = Bundle(
        id=1,
        txs=(TxRef("0x10", "0xpool"),),
        writes=frozenset({k1, k2}),
        bid=exclusive_bid(100.0),
        valuation=exclusive_bid(100.0),
    )
    competitor = Bundle(
        id=2,
        txs=(TxRef("0x20", "0xpool"),),
        writes=frozenset({k1, k2}),
        bid=exclusive_bid(60.0),
        valuation=exclusive_bid(60.0),
    )
    scenario = Scenario(bundles=(subject, competitor), k_cutoff=8, seed=11)
    parts = (
        Bundle(
            id=11,
            txs=(TxRef("0x11", "0xpool"),),
            writes=frozenset({k1}),
            bid=exclusive_bid(50.0),
            valuation=exclusive_bid(50.0),
        ),
        Bundle(
            id=12,
            txs=(TxRef("0x12", "0xpool"),),
            writes=frozenset({k2}),
            bid=exclusive_bid(50.0),
            valuation=exclusive_bid(50.0),
        ),
    )
    return scenario, 1, parts


def integration_fixture() -> Scenario:
    """A conflict-free bundle alongside a contested pair, with one competitive
    builder and one dominated stub: the smallest scenario where the
    participate-vs-integrate table is non-trivial."""
    base = example2_scenario()
    free = Bundle(
        id=3,
        txs=(TxRef("0xc3", "0xlonely"),),
        writes=frozenset({StorageKey("0xlonely", "s")}),
        bid=ConstantBid(25.0),
        valuation=ConstantBid(25.0),
    )
    return Scenario(
        bundles=base.bundles + (free,),
        builders=(BuilderSpec("greedy-bid"), BuilderSpec("empty")),
        k_cutoff=base.k_cutoff,
        seed=base.seed,
    )
