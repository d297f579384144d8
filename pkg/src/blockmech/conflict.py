"""Storage-conflict graph: grouping bundles into connected components.

Two bundles conflict when one's writes intersect the other's reads or
writes (write-write or read-write; read-read is not a conflict). Groups are
computed from the declared footprints, not from gated effective execution:
grouping runs before any algorithm executes, and the declared footprint is
the conservative superset for a gated bundle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Bundle, as_bundle_map


@dataclass(frozen=True)
class ConflictGroup:
    """One connected component of the conflict graph."""

    members: frozenset

    @property
    def min_id(self) -> int:
        return min(self.members)

    def sorted_members(self) -> list:
        return sorted(self.members)

    def __len__(self) -> int:
        return len(self.members)


def conflicts(a: Bundle, b: Bundle) -> bool:
    """Pairwise conflict predicate (symmetric by construction)."""
    return bool(a.writes & b.footprint) or bool(b.writes & a.footprint)


def get_conflict_groups(bundles) -> list:
    """Partition bundles into conflict groups.

    Driven by a per-key index (writers and readers per storage key) so the
    cost is proportional to the total number of declared accesses plus
    component labeling; bundles are never compared pairwise. Returned groups
    are sorted by smallest member id.
    """
    by_id = as_bundle_map(bundles)
    parent = {i: i for i in by_id}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:  # path compression
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    first_writer: dict = {}
    readers: dict = {}
    for i in sorted(by_id):
        b = by_id[i]
        for key in b.writes:
            if key in first_writer:
                union(i, first_writer[key])
            else:
                first_writer[key] = i
        for key in b.reads:
            readers.setdefault(key, []).append(i)

    # A reader joins the component of any writer of the same key. Keys with
    # no writer create no edges: concurrent reads commute.
    for key, ids in readers.items():
        writer = first_writer.get(key)
        if writer is None:
            continue
        for i in ids:
            union(i, writer)

    components: dict = {}
    for i in by_id:
        components.setdefault(find(i), []).append(i)
    groups = [ConflictGroup(frozenset(m)) for m in components.values()]
    groups.sort(key=lambda g: g.min_id)
    return groups


def conflict_free_set(groups) -> frozenset:
    """Bundles alone in their group: execution neither affects nor depends
    on any other bundle."""
    return frozenset(next(iter(g.members)) for g in groups if len(g) == 1)
