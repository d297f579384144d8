"""Report payloads and table rendering.

Every subcommand builds one JSON-serializable payload; the human-readable
table renders from that same payload, so the two can never disagree. JSON
output is canonical (sorted keys, fixed indent) to keep byte-identical
reruns byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

SCHEMA_VERSION = 1


def report_payload(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, **body}


def dumps_report(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_report(path, payload: dict) -> None:
    Path(path).write_text(dumps_report(payload))


def fmt(x) -> str:
    """Numbers without float noise: 150 not 150.0, 0.5 as-is."""
    if isinstance(x, float) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def fmt_block(block) -> str:
    return "[" + ", ".join(str(i) for i in block) + "]"


def render_table(headers, rows) -> str:
    """Plain left-aligned columns, two-space gutter."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(headers))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
