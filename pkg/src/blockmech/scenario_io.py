"""Scenario file load/save.

The on-disk format is JSON with top-level fields `bundles`, `builders`,
`k_cutoff`, `seed`; see docs/scenario_format.md for the field reference.
Saving is canonical (sorted keys, fixed indentation) so identical scenarios
produce byte-identical files, and load(save(s)) is structurally equal to s.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import (
    BuilderSpec,
    Bundle,
    CoinbaseLabel,
    ConstantBid,
    GatedBid,
    Scenario,
    StorageKey,
    TableBid,
    TxRef,
)


class ScenarioParseError(ValueError):
    """Malformed scenario file; the message carries the offending location."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise ScenarioParseError(where, f"missing required field '{key}'")
    return record[key]


def _bid_to_dict(fn) -> dict:
    if isinstance(fn, ConstantBid):
        return {"variant": "constant", "value": fn.value}
    if isinstance(fn, TableBid):
        return {
            "variant": "table",
            "entries": dict(fn.entries),
            "default": fn.default,
        }
    if isinstance(fn, GatedBid):
        return {
            "variant": "gated",
            "target": fn.target.value,
            "inner": _bid_to_dict(fn.inner),
        }
    raise TypeError(f"unknown bid function type {type(fn).__name__}")


def _bid_from_dict(record, where: str):
    if not isinstance(record, dict):
        raise ScenarioParseError(where, "expected an object with a 'variant' field")
    variant = _require(record, "variant", where)
    if variant == "constant":
        return ConstantBid(float(_require(record, "value", where)))
    if variant == "table":
        entries = _require(record, "entries", where)
        return TableBid(
            {str(k): float(v) for k, v in entries.items()},
            float(_require(record, "default", where)),
        )
    if variant == "gated":
        return GatedBid(
            CoinbaseLabel(str(_require(record, "target", where))),
            _bid_from_dict(_require(record, "inner", where), f"{where}.inner"),
        )
    raise ScenarioParseError(where, f"unknown bid variant '{variant}'")


def _keys_to_list(keys) -> list:
    return [{"address": k.address, "slot": k.slot} for k in sorted(keys)]


def _keys_from_list(records, where: str) -> frozenset:
    keys = []
    for n, rec in enumerate(records):
        loc = f"{where}[{n}]"
        keys.append(
            StorageKey(str(_require(rec, "address", loc)), str(_require(rec, "slot", loc)))
        )
    return frozenset(keys)


def bundle_to_dict(b: Bundle) -> dict:
    return {
        "id": b.id,
        "txs": [{"hash": tx.tx_hash, "target": tx.target} for tx in b.txs],
        "reads": _keys_to_list(b.reads),
        "writes": _keys_to_list(b.writes),
        "weight": b.weight,
        "gate": None if b.gate is None else b.gate.value,
        "bid": _bid_to_dict(b.bid),
        "valuation": _bid_to_dict(b.valuation),
    }


def bundle_from_dict(record, where: str) -> Bundle:
    txs = []
    for n, rec in enumerate(_require(record, "txs", where)):
        loc = f"{where}.txs[{n}]"
        txs.append(
            TxRef(str(_require(rec, "hash", loc)), str(_require(rec, "target", loc)))
        )
    gate = record.get("gate")
    return Bundle(
        id=int(_require(record, "id", where)),
        txs=tuple(txs),
        reads=_keys_from_list(record.get("reads", []), f"{where}.reads"),
        writes=_keys_from_list(record.get("writes", []), f"{where}.writes"),
        weight=int(record.get("weight", 1)),
        gate=None if gate is None else CoinbaseLabel(str(gate)),
        bid=_bid_from_dict(_require(record, "bid", where), f"{where}.bid"),
        valuation=_bid_from_dict(
            _require(record, "valuation", where), f"{where}.valuation"
        ),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "bundles": [bundle_to_dict(b) for b in scenario.bundles],
        "builders": [
            {"name": spec.name, "params": dict(spec.params)}
            for spec in scenario.builders
        ],
        "k_cutoff": scenario.k_cutoff,
        "seed": scenario.seed,
    }


def scenario_from_dict(record) -> Scenario:
    if not isinstance(record, dict):
        raise ScenarioParseError("$", "scenario file must contain a JSON object")
    bundles = [
        bundle_from_dict(rec, f"bundles[{n}]")
        for n, rec in enumerate(_require(record, "bundles", "$"))
    ]
    builders = []
    for n, rec in enumerate(record.get("builders", [])):
        loc = f"builders[{n}]"
        builders.append(
            BuilderSpec(str(_require(rec, "name", loc)), dict(rec.get("params", {})))
        )
    return Scenario(
        bundles=tuple(bundles),
        builders=tuple(builders),
        k_cutoff=int(_require(record, "k_cutoff", "$")),
        seed=int(_require(record, "seed", "$")),
    )


def dumps_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), sort_keys=True, indent=2) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(scenario))


def load_scenario(path) -> Scenario:
    text = Path(path).read_text()
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return scenario_from_dict(record)
