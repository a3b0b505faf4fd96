"""Entity-set algebra, RCC-5 relation classification, and the pairwise
overlap index that backs overlap-driven exploration.

An :class:`EntitySet` is an immutable, strictly ascending collection of
row identifiers over one base table. All exploration operators consume
and produce these values. Pairwise relations between sets over the same
table are classified into the five discrete RCC-5 relations; the
boundary-sensitive relations of richer RCC fragments have no meaning for
finite id sets and are deliberately absent.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from dataplore.errors import BaseTableMismatch, BothEmpty, UnknownSetId
from dataplore.sets import kernels

__all__ = [
    "EntitySet",
    "RccRelation",
    "set_algebra",
    "rcc_relation",
    "jaccard",
    "OverlapIndex",
    "kernels",
]


@dataclass(frozen=True)
class EntitySet:
    """Sorted, deduplicated row ids over one base table.

    ``provenance`` optionally records what created the set: a pipeline
    step id or the query AST the set was materialized from.
    """

    base_table: str
    ids: tuple = ()
    label: Optional[str] = None
    provenance: Any = field(default=None, compare=False)

    def __post_init__(self):
        ids = tuple(self.ids)
        for i in range(1, len(ids)):
            if not ids[i - 1] < ids[i]:
                raise ValueError(f"ids must be strictly ascending, got {ids[i - 1]!r} before {ids[i]!r}")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_ids(cls, base_table: str, ids: Iterable, label: Optional[str] = None,
                 provenance: Any = None) -> "EntitySet":
        """Build a set from an arbitrary id iterable (sorts and deduplicates)."""
        return cls(base_table, tuple(sorted(set(ids))), label, provenance)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item) -> bool:
        return item in set(self.ids)

    def with_provenance(self, provenance: Any) -> "EntitySet":
        return EntitySet(self.base_table, self.ids, self.label, provenance)

    def with_label(self, label: str) -> "EntitySet":
        return EntitySet(self.base_table, self.ids, label, self.provenance)

    def to_json(self) -> dict:
        return {"base_table": self.base_table, "label": self.label, "ids": list(self.ids)}

    @classmethod
    def from_json(cls, doc: dict) -> "EntitySet":
        return cls.from_ids(doc["base_table"], doc.get("ids", []), doc.get("label"))


class RccRelation(enum.Enum):
    """Discrete RCC-5 relation between two sets over the same table."""

    EQ = "EQ"    # equal
    DR = "DR"    # disjoint
    PO = "PO"    # partial overlap
    PP = "PP"    # proper subset
    PPI = "PPi"  # proper superset


def _check_same_table(a: EntitySet, b: EntitySet) -> None:
    if a.base_table != b.base_table:
        raise BaseTableMismatch(
            f"sets range over different tables: {a.base_table!r} vs {b.base_table!r}"
        )


def set_algebra(a: EntitySet, b: EntitySet, op: str) -> EntitySet:
    """Standard set algebra: op is 'intersect', 'union', or 'difference'."""
    _check_same_table(a, b)
    la, lb = list(a.ids), list(b.ids)
    if op == "intersect":
        ids = kernels.intersect_sorted(la, lb)
    elif op == "union":
        ids = kernels.union_sorted(la, lb)
    elif op == "difference":
        ids = kernels.difference_sorted(la, lb)
    else:
        raise ValueError(f"unknown set operation {op!r}")
    return EntitySet(a.base_table, tuple(ids))


def rcc_relation(a: EntitySet, b: EntitySet) -> RccRelation:
    """Classify the pair into RCC-5.

    Edge cases: two empty sets are EQ; an empty set is PP of any
    non-empty set (the empty set is a proper subset in plain set
    semantics); DR therefore only applies to disjoint pairs that are not
    in a subset relation.
    """
    _check_same_table(a, b)
    inter = kernels.intersection_size(list(a.ids), list(b.ids))
    if inter == len(a) == len(b):
        return RccRelation.EQ
    if inter == len(a):
        return RccRelation.PP
    if inter == len(b):
        return RccRelation.PPI
    if inter == 0:
        return RccRelation.DR
    return RccRelation.PO


def jaccard(a: EntitySet, b: EntitySet) -> float:
    """|a ∩ b| / |a ∪ b|; undefined (BothEmpty) when both sets are empty."""
    _check_same_table(a, b)
    if not a.ids and not b.ids:
        raise BothEmpty("jaccard is undefined for two empty sets")
    inter = kernels.intersection_size(list(a.ids), list(b.ids))
    union = len(a) + len(b) - inter
    return inter / union


class OverlapIndex:
    """Precomputed pairwise intersection cardinalities between registered sets.

    Registration is eager: a new set is intersected against every
    previously registered set over the same base table, so queries are a
    sort over already-known counts. Many readers may query concurrently;
    registration takes an internal lock (one writer).
    """

    def __init__(self):
        self._sets: list[EntitySet] = []
        self._pairs: dict[tuple[int, int], int] = {}
        self._first_id_by_key: dict[tuple[str, tuple], int] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._sets)

    def register_set(self, entity_set: EntitySet) -> int:
        """Register a set and precompute overlaps against same-table sets."""
        with self._lock:
            set_id = len(self._sets)
            ids = list(entity_set.ids)
            for other_id, other in enumerate(self._sets):
                if other.base_table == entity_set.base_table:
                    self._pairs[(other_id, set_id)] = kernels.intersection_size(
                        list(other.ids), ids
                    )
            self._pairs[(set_id, set_id)] = len(ids)
            self._sets.append(entity_set)
            self._first_id_by_key.setdefault((entity_set.base_table, entity_set.ids), set_id)
            return set_id

    def find(self, entity_set: EntitySet) -> Optional[int]:
        """Id of the first registered set with identical table and ids, if any."""
        return self._first_id_by_key.get((entity_set.base_table, entity_set.ids))

    def ensure(self, entity_set: EntitySet) -> int:
        """Find the set or register it transparently."""
        found = self.find(entity_set)
        return found if found is not None else self.register_set(entity_set)

    def get_set(self, set_id: int) -> EntitySet:
        if not 0 <= set_id < len(self._sets):
            raise UnknownSetId(f"no registered set with id {set_id}")
        return self._sets[set_id]

    def overlap(self, i: int, j: int) -> int:
        """Intersection cardinality between two registered sets (diagonal = size)."""
        if not 0 <= i < len(self._sets):
            raise UnknownSetId(f"no registered set with id {i}")
        if not 0 <= j < len(self._sets):
            raise UnknownSetId(f"no registered set with id {j}")
        key = (i, j) if i <= j else (j, i)
        entry = self._pairs.get(key)
        return 0 if entry is None else entry

    def query_overlaps(self, set_id: int, min_overlap: int) -> list[tuple[int, int]]:
        """Same-table sets overlapping the queried one in >= min_overlap ids.

        Sorted by overlap descending, ties by set id ascending; the
        queried set itself is excluded.
        """
        if min_overlap < 1:
            raise ValueError("min_overlap must be >= 1")
        base = self.get_set(set_id)
        hits = []
        for other_id, other in enumerate(self._sets):
            if other_id == set_id or other.base_table != base.base_table:
                continue
            count = self.overlap(set_id, other_id)
            if count >= min_overlap:
                hits.append((other_id, count))
        hits.sort(key=lambda pair: (-pair[1], pair[0]))
        return hits
