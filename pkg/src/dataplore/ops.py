"""Exploration operators: the verbs a pipeline is made of.

Every operator is a pure function over immutable inputs. Ranked outputs
break ties by id (or candidate index) ascending so repeated runs and
recorded sessions always reproduce byte-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from dataplore.catalog import Catalog
from dataplore.errors import (
    BaseTableMismatch,
    BrokenJoinPath,
    EmptyDistribution,
    EmptyExamples,
    MissingTaxonomy,
    NoNumericFeatures,
    NonCategoricalAttribute,
    TypeMismatch,
    UnknownAttribute,
)
from dataplore.query import MISSING_KEY, compare_values, normalize_op
from dataplore.schema import JoinEdge, SchemaGraph
from dataplore.sets import EntitySet

HISTOGRAM_BINS = 16


def full_set(catalog: Catalog, table: str, label: Optional[str] = None) -> EntitySet:
    """The whole table as an entity set."""
    return EntitySet(table, catalog.table(table).ids, label=label)


def _column_kind(catalog: Catalog, table: str, attribute: str) -> str:
    tbl = catalog.table(table)
    if not tbl.has_column(attribute):
        raise UnknownAttribute(f"table {table!r} has no attribute {attribute!r}")
    return tbl.column(attribute).kind


# -- by_filter --------------------------------------------------------------


def by_filter(catalog: Catalog, entity_set: EntitySet, attribute: str, op: str, value) -> EntitySet:
    """Keep the members whose attribute satisfies the comparison.

    Missing values never satisfy any comparison, including '!='.
    """
    op = normalize_op(op)
    kind = _column_kind(catalog, entity_set.base_table, attribute)
    if kind == "numeric":
        if op == "contains" or isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeMismatch(f"numeric attribute {attribute!r} needs a numeric comparison")
    elif not isinstance(value, str):
        raise TypeMismatch(f"attribute {attribute!r} holds strings, got {value!r}")
    table = catalog.table(entity_set.base_table)
    kept = [
        row_id
        for row_id in entity_set.ids
        if compare_values(table.value(row_id, attribute), op, value)
    ]
    return EntitySet(entity_set.base_table, tuple(kept))


# -- by_facet ---------------------------------------------------------------


@dataclass(frozen=True)
class FacetBucket:
    value: str
    members: EntitySet
    count: int


@dataclass(frozen=True)
class FacetResult:
    """A partition of the input set by one categorical attribute.

    Buckets are sorted by value ascending; members with a missing value
    form the dedicated bucket "∅", always last.
    """

    table: str
    attribute: str
    buckets: tuple[FacetBucket, ...]

    def to_json(self) -> dict:
        return {
            "table": self.table,
            "attribute": self.attribute,
            "buckets": [
                {"value": b.value, "ids": list(b.members.ids), "count": b.count}
                for b in self.buckets
            ],
        }


def by_facet(catalog: Catalog, entity_set: EntitySet, attribute: str) -> FacetResult:
    """Group the set's members by a categorical attribute's values."""
    kind = _column_kind(catalog, entity_set.base_table, attribute)
    if kind != "categorical":
        raise NonCategoricalAttribute(
            f"facets need a categorical attribute; {attribute!r} is {kind}"
        )
    table = catalog.table(entity_set.base_table)
    groups: dict[str, list] = {}
    for row_id in entity_set.ids:
        value = table.value(row_id, attribute)
        key = MISSING_KEY if value is None else str(value)
        groups.setdefault(key, []).append(row_id)
    ordered = sorted(groups, key=lambda v: (v == MISSING_KEY, v))
    buckets = tuple(
        FacetBucket(
            value=key,
            members=EntitySet(entity_set.base_table, tuple(groups[key])),
            count=len(groups[key]),
        )
        for key in ordered
    )
    return FacetResult(table=entity_set.base_table, attribute=attribute, buckets=buckets)


# -- by_example ----------------------------------------------------------------


@dataclass(frozen=True)
class Taxonomy:
    """Rooted category tree with row-id assignments, for semantic distance."""

    table: str
    parents: dict[str, Optional[str]]  # node -> parent, root has None
    assignments: dict[str, str]  # row id -> node

    def __post_init__(self):
        roots = [n for n, p in self.parents.items() if p is None]
        if len(roots) != 1:
            raise ValueError("taxonomy needs exactly one root")
        for node, parent in self.parents.items():
            if parent is not None and parent not in self.parents:
                raise ValueError(f"taxonomy node {node!r} has unknown parent {parent!r}")
            # walk to the root to reject cycles
            seen = {node}
            cursor = parent
            while cursor is not None:
                if cursor in seen:
                    raise ValueError(f"taxonomy contains a cycle through {cursor!r}")
                seen.add(cursor)
                cursor = self.parents[cursor]
        for row_id, node in self.assignments.items():
            if node not in self.parents:
                raise ValueError(f"row {row_id!r} assigned to unknown node {node!r}")

    def _ancestry(self, node: str) -> list[str]:
        chain = [node]
        while self.parents[chain[-1]] is not None:
            chain.append(self.parents[chain[-1]])
        return chain

    def path_length(self, a: str, b: str) -> int:
        """Edges on the tree path between two nodes."""
        chain_a = self._ancestry(a)
        chain_b = self._ancestry(b)
        depth = {node: i for i, node in enumerate(chain_a)}
        for steps_b, node in enumerate(chain_b):
            if node in depth:
                return depth[node] + steps_b
        raise ValueError(f"nodes {a!r} and {b!r} share no root")

    def node_of(self, row_id: str) -> Optional[str]:
        return self.assignments.get(row_id)

    @classmethod
    def from_json(cls, doc: dict) -> "Taxonomy":
        parents = {entry["name"]: entry.get("parent") for entry in doc["nodes"]}
        return cls(table=doc["table"], parents=parents, assignments=dict(doc.get("assignments", {})))


NUMERIC_METRICS = ("euclidean", "cosine", "manhattan")


@dataclass(frozen=True)
class SimilaritySpec:
    """How 'similar' is measured: numeric feature metric or taxonomy distance."""

    features: tuple[str, ...] = ()
    metric: str = "euclidean"
    k: int = 5
    taxonomy: Optional[Taxonomy] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric == "semantic":
            if self.taxonomy is None:
                raise MissingTaxonomy("semantic distance needs a taxonomy")
        elif self.metric not in NUMERIC_METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        elif not self.features:
            raise NoNumericFeatures("numeric metrics need at least one feature column")


def _zscore_columns(catalog: Catalog, table: str, features: Sequence[str]) -> dict[str, tuple[float, float]]:
    """(mean, population std) per feature over the whole base table."""
    tbl = catalog.table(table)
    stats = {}
    for feature in features:
        kind = _column_kind(catalog, table, feature)
        if kind != "numeric":
            raise NoNumericFeatures(f"feature {feature!r} is {kind}, not numeric")
        values = [v for v in tbl.values(feature) if v is not None]
        if values:
            mean = sum(values) / len(values)
            std = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        else:
            mean, std = 0.0, 0.0
        stats[feature] = (mean, std)
    return stats


def _feature_vector(catalog: Catalog, table: str, row_id, features: Sequence[str],
                    stats: dict) -> list[float]:
    # std == 0 (or a missing cell) contributes 0: the feature carries no signal
    tbl = catalog.table(table)
    vector = []
    for feature in features:
        mean, std = stats[feature]
        value = tbl.value(row_id, feature)
        vector.append(0.0 if value is None or std == 0.0 else (value - mean) / std)
    return vector


def _distance(metric: str, a: Sequence[float], b: Sequence[float]) -> float:
    if metric == "euclidean":
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    if metric == "manhattan":
        return sum(abs(x - y) for x, y in zip(a, b))
    # cosine distance; zero vectors have no direction, so two of them are
    # identical (0) and one against a real vector is maximally far (1)
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0.0 and norm_b == 0.0:
        return 0.0
    if norm_a == 0.0 or norm_b == 0.0:
        return 1.0
    dot = sum(x * y for x, y in zip(a, b))
    return 1.0 - dot / (norm_a * norm_b)


def by_example(catalog: Catalog, examples: EntitySet, spec: SimilaritySpec) -> list[tuple[str, float]]:
    """Rank the rest of the base table by closeness to the example set.

    Numeric metrics z-score every feature over the whole base table and
    measure against the examples' centroid; the semantic metric measures
    tree path length to the nearest example's taxonomy node. Returns at
    most k (id, distance) pairs, distance ascending, ties by id.
    """
    if not examples.ids:
        raise EmptyExamples("by_example needs at least one example row")
    table = catalog.table(examples.base_table)
    pool = [row_id for row_id in table.ids if row_id not in set(examples.ids)]

    if spec.metric == "semantic":
        taxonomy = spec.taxonomy
        if taxonomy is None or taxonomy.table != examples.base_table:
            raise MissingTaxonomy(f"no taxonomy over table {examples.base_table!r}")
        example_nodes = [n for n in (taxonomy.node_of(i) for i in examples.ids) if n is not None]
        if not example_nodes:
            raise MissingTaxonomy("no example row is assigned to a taxonomy node")
        scored = []
        for row_id in pool:
            node = taxonomy.node_of(row_id)
            if node is None:
                continue  # unassigned rows have no semantic position
            distance = min(taxonomy.path_length(node, other) for other in example_nodes)
            scored.append((row_id, float(distance)))
    else:
        stats = _zscore_columns(catalog, examples.base_table, spec.features)
        vectors = [
            _feature_vector(catalog, examples.base_table, i, spec.features, stats)
            for i in examples.ids
        ]
        centroid = [sum(column) / len(vectors) for column in zip(*vectors)]
        scored = []
        for row_id in pool:
            vector = _feature_vector(catalog, examples.base_table, row_id, spec.features, stats)
            scored.append((row_id, _distance(spec.metric, centroid, vector)))

    scored.sort(key=lambda pair: (pair[1], pair[0]))
    return scored[: spec.k]


# -- by_overlap -----------------------------------------------------------------


def by_overlap(entity_set: EntitySet, index, min_overlap: int) -> list[tuple[EntitySet, int]]:
    """Registered sets overlapping this one, largest overlap first.

    The input set is registered transparently when the index has not
    seen it yet.
    """
    set_id = index.ensure(entity_set)
    return [
        (index.get_set(other_id), count)
        for other_id, count in index.query_overlaps(set_id, min_overlap)
    ]


# -- by_join -----------------------------------------------------------------


def resolve_join_path(graph: SchemaGraph, start: str, tables: Sequence[str]) -> list[JoinEdge]:
    """Turn a table-hop list into join edges; adjacent hops must share an edge."""
    edges = []
    current = start
    for table in tables:
        edge = graph.edge_between(current, table)
        if edge is None:
            raise BrokenJoinPath(f"no join edge between {current!r} and {table!r}")
        edges.append(edge)
        current = table
    return edges


def by_join(catalog: Catalog, entity_set: EntitySet, join_path: Sequence[JoinEdge]) -> EntitySet:
    """Follow a join path and collect the reachable ids in the terminal table."""
    current_table = entity_set.base_table
    current_ids = list(entity_set.ids)
    for edge in join_path:
        if not edge.touches(current_table):
            raise BrokenJoinPath(
                f"join edge {edge.from_table}->{edge.to_table} does not touch {current_table!r}"
            )
        if edge.from_table == current_table:
            here_col, there_table, there_col = edge.from_column, edge.to_table, edge.to_column
        else:
            here_col, there_table, there_col = edge.to_column, edge.from_table, edge.from_column
        table = catalog.table(current_table)
        index = catalog.join_index(there_table, there_col)
        reached = set()
        for row_id in current_ids:
            key = table.value(row_id, here_col)
            if key is None:
                continue
            reached.update(index.get(key, ()))
        current_table = there_table
        current_ids = sorted(reached)
    return EntitySet(current_table, tuple(current_ids))


# -- by_superset -----------------------------------------------------------------


@dataclass(frozen=True)
class CoverResult:
    cover: tuple[int, ...]  # indices into the candidate list, in pick order
    uncovered: EntitySet

    def to_json(self) -> dict:
        return {"cover": list(self.cover), "uncovered": self.uncovered.to_json()}


def by_superset(target: EntitySet, candidates: Sequence[EntitySet]) -> CoverResult:
    """Greedy set cover of the target from the candidate sets.

    Repeatedly picks the candidate covering the most still-uncovered
    target ids (ties to the smaller index) and stops when the target is
    covered or no candidate makes progress.
    """
    for candidate in candidates:
        if candidate.base_table != target.base_table:
            raise BaseTableMismatch(
                f"candidate over {candidate.base_table!r} cannot cover {target.base_table!r}"
            )
    uncovered = set(target.ids)
    chosen: list[int] = []
    available = set(range(len(candidates)))
    while uncovered and available:
        best_index, best_gain = None, 0
        for index in sorted(available):
            gain = len(uncovered & set(candidates[index].ids))
            if gain > best_gain:
                best_index, best_gain = index, gain
        if best_index is None:
            break
        chosen.append(best_index)
        available.remove(best_index)
        uncovered -= set(candidates[best_index].ids)
    return CoverResult(
        cover=tuple(chosen),
        uncovered=EntitySet(target.base_table, tuple(sorted(uncovered))),
    )


# -- by_analytics -----------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticsMatch:
    candidate_index: int
    candidate: EntitySet = field(compare=False)
    divergence: float


def _distribution(catalog: Catalog, entity_set: EntitySet, attribute: str,
                  support) -> Optional[list[float]]:
    """Probability vector of the set's non-missing values over the support.

    Numeric support is (min, max) split into 16 equal-width bins; the
    categorical support is the sorted list of all values the base table
    holds. Returns None when the set has only missing values.
    """
    table = catalog.table(entity_set.base_table)
    kind = table.column(attribute).kind
    if kind == "numeric":
        low, high = support
        width = (high - low) / HISTOGRAM_BINS
        counts = [0.0] * HISTOGRAM_BINS
        total = 0
        for row_id in entity_set.ids:
            value = table.value(row_id, attribute)
            if value is None:
                continue
            bucket = 0 if width == 0 else min(HISTOGRAM_BINS - 1, int((value - low) / width))
            counts[bucket] += 1
            total += 1
    else:
        positions = {value: i for i, value in enumerate(support)}
        counts = [0.0] * len(support)
        total = 0
        for row_id in entity_set.ids:
            value = table.value(row_id, attribute)
            if value is None:
                continue
            counts[positions[value]] += 1
            total += 1
    if total == 0:
        return None
    return [c / total for c in counts]


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    """Half the L1 distance between two probability vectors; in [0, 1]."""
    return 0.5 * sum(abs(x - y) for x, y in zip(p, q))


def by_analytics(
    catalog: Catalog,
    entity_set: EntitySet,
    attribute: str,
    candidates: Sequence[EntitySet],
    mode: str = "similar",
) -> list[AnalyticsMatch]:
    """Rank candidate sets by how closely their value distribution over the
    attribute matches the input set's.

    Divergence is total variation distance. 'similar' ranks ascending,
    'dissimilar' descending; ties break toward the smaller candidate
    index. Candidates whose distribution is empty (all values missing)
    cannot be compared and are left out of the ranking.
    """
    if mode not in ("similar", "dissimilar"):
        raise ValueError(f"mode must be 'similar' or 'dissimilar', got {mode!r}")
    kind = _column_kind(catalog, entity_set.base_table, attribute)
    for candidate in candidates:
        if candidate.base_table != entity_set.base_table:
            raise BaseTableMismatch("candidates must range over the input set's table")
    table = catalog.table(entity_set.base_table)
    if kind == "numeric":
        values = [v for v in table.values(attribute) if v is not None]
        support = (min(values), max(values)) if values else (0.0, 0.0)
    else:
        support = sorted({v for v in table.values(attribute) if v is not None})
    reference = _distribution(catalog, entity_set, attribute, support)
    if reference is None:
        raise EmptyDistribution(
            f"set has only missing values for {attribute!r}; no distribution to compare"
        )
    matches = []
    for index, candidate in enumerate(candidates):
        distribution = _distribution(catalog, candidate, attribute, support)
        if distribution is None:
            continue
        matches.append(
            AnalyticsMatch(
                candidate_index=index,
                candidate=candidate,
                divergence=total_variation(reference, distribution),
            )
        )
    sign = 1.0 if mode == "similar" else -1.0
    matches.sort(key=lambda m: (sign * m.divergence, m.candidate_index))
    return matches
