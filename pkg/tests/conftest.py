"""Shared test helpers: terse bundle/scenario constructors."""

from __future__ import annotations

import pytest

from blockmech.model import (
    Bundle,
    ConstantBid,
    Scenario,
    StorageKey,
    TxRef,
)


def key(address: str, slot: str = "s") -> StorageKey:
    return StorageKey(address, slot)


def make_bundle(
    bundle_id: int,
    bid=None,
    *,
    writes=(),
    reads=(),
    txs=None,
    gate=None,
    valuation=None,
    weight=1,
) -> Bundle:
    if isinstance(bid, (int, float)):
        bid = ConstantBid(float(bid))
    if bid is None:
        bid = ConstantBid(0.0)
    if valuation is None:
        valuation = bid
    elif isinstance(valuation, (int, float)):
        valuation = ConstantBid(float(valuation))
    if txs is None:
        txs = (TxRef(f"0x{bundle_id:02x}", f"0xtarget{bundle_id}"),)
    return Bundle(
        id=bundle_id,
        txs=tuple(txs),
        reads=frozenset(reads),
        writes=frozenset(writes),
        weight=weight,
        gate=gate,
        bid=bid,
        valuation=valuation,
    )


def make_scenario(*bundles, builders=(), k_cutoff=8, seed=0) -> Scenario:
    return Scenario(
        bundles=tuple(bundles), builders=tuple(builders), k_cutoff=k_cutoff, seed=seed
    )


@pytest.fixture
def example2():
    from blockmech.fixtures import example2_scenario

    return example2_scenario()
