"""Starter queries (cold start) and next-step recommendations (warm start).

Cold start scores facet candidates by normalized entropy so the most
evenly spread categorical columns surface first. Warm start ranks
next-step signatures by a blend of the transition probability learned
from session logs and a novelty bonus for signatures the session has
not used yet:

    score = (1 - λ) * P(next | last) + λ * [next unseen in session]

Transition probabilities interpolate the observed frequencies with a
uniform prior: P = (count/total + α/N) / (1 + α). The α mass is
proportional, not additive, so scaling all raw counts by a positive
constant leaves every probability — and therefore the ranking —
unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from dataplore.catalog import Catalog, ColumnProfile
from dataplore.errors import EmptySession
from dataplore.query import QueryAst, facet_ast, full_scan_ast
from dataplore.sets import EntitySet

DEFAULT_ALPHA = 0.1
FACET_MIN_DISTINCT = 2
FACET_MAX_DISTINCT = 20
STARTER_SCAN_SCORE = 0.1  # below any real facet score; scans are the fallback


@dataclass(frozen=True)
class Signature:
    """First-order step signature: operator kind plus the attribute it touched."""

    op: str
    attribute: Optional[str] = None

    @property
    def name(self) -> str:
        return self.op if self.attribute is None else f"{self.op}:{self.attribute}"

    @classmethod
    def parse(cls, name: str) -> "Signature":
        op, _, attribute = name.partition(":")
        return cls(op, attribute or None)


@dataclass(frozen=True)
class Recommendation:
    kind: str  # "starter_query" | "next_operator"
    payload: Union[QueryAst, dict]
    score: float
    rationale: str

    def to_json(self) -> dict:
        payload = self.payload.to_json() if isinstance(self.payload, QueryAst) else self.payload
        return {
            "kind": self.kind,
            "payload": payload,
            "score": self.score,
            "rationale": self.rationale,
        }


def cold_start(
    catalog: Catalog, profiles: dict[tuple[str, str], ColumnProfile], k: int
) -> list[Recommendation]:
    """Starter queries for a user who has not typed anything yet.

    Candidates: one full-table scan per table, and one facet query per
    categorical column with 2..20 distinct values, scored by entropy
    normalized to [0, 1] by ln(distinct_count).
    """
    candidates: list[tuple[float, str, Recommendation]] = []
    for table in catalog.table_names():
        candidates.append(
            (
                STARTER_SCAN_SCORE,
                table,
                Recommendation(
                    kind="starter_query",
                    payload=full_scan_ast(table),
                    score=STARTER_SCAN_SCORE,
                    rationale=f"Browse the whole {table} table.",
                ),
            )
        )
        for column in catalog.table(table).column_names():
            profile = profiles.get((table, column))
            if profile is None or profile.kind != "categorical":
                continue
            if not FACET_MIN_DISTINCT <= profile.distinct_count <= FACET_MAX_DISTINCT:
                continue
            score = (
                profile.entropy / math.log(profile.distinct_count)
                if profile.distinct_count > 1
                else 0.0
            )
            candidates.append(
                (
                    score,
                    f"{table}.{column}",
                    Recommendation(
                        kind="starter_query",
                        payload=facet_ast(table, column),
                        score=score,
                        rationale=(
                            f"{column} splits {table} into "
                            f"{profile.distinct_count} groups."
                        ),
                    ),
                )
            )
    candidates.sort(key=lambda entry: (-entry[0], entry[1]))
    return [recommendation for _, _, recommendation in candidates[: max(k, 0)]]


@dataclass
class TransitionModel:
    """Counts over consecutive step-signature pairs, smoothed toward uniform."""

    alpha: float = DEFAULT_ALPHA
    counts: dict[str, dict[str, float]] = field(default_factory=dict)
    signatures: set[str] = field(default_factory=set)

    def observe(self, source: Signature, target: Signature, weight: float = 1.0) -> None:
        self.signatures.add(source.name)
        self.signatures.add(target.name)
        row = self.counts.setdefault(source.name, {})
        row[target.name] = row.get(target.name, 0.0) + weight

    def probabilities(self, source: Signature) -> dict[str, float]:
        """P(target | source) over all known signatures; sums to 1.

        With no known signatures the distribution is empty; with no
        observations for this source it is uniform.
        """
        known = sorted(self.signatures)
        if not known:
            return {}
        row = self.counts.get(source.name, {})
        total = sum(row.values())
        n = len(known)
        if total == 0:
            return {name: 1.0 / n for name in known}
        return {
            name: (row.get(name, 0.0) / total + self.alpha / n) / (1.0 + self.alpha)
            for name in known
        }

    def scaled(self, factor: float) -> "TransitionModel":
        """Copy with every raw count multiplied by a positive constant."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return TransitionModel(
            alpha=self.alpha,
            counts={
                source: {target: count * factor for target, count in row.items()}
                for source, row in self.counts.items()
            },
            signatures=set(self.signatures),
        )

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "counts": {s: dict(sorted(row.items())) for s, row in sorted(self.counts.items())},
            "signatures": sorted(self.signatures),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TransitionModel":
        return cls(
            alpha=doc.get("alpha", DEFAULT_ALPHA),
            counts={s: dict(row) for s, row in doc.get("counts", {}).items()},
            signatures=set(doc.get("signatures", [])),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json(), handle, indent=2)

    @classmethod
    def load(cls, path) -> "TransitionModel":
        with open(path, encoding="utf-8") as handle:
            return cls.from_json(json.load(handle))


def _session_signatures(session) -> list[Signature]:
    """Step signatures of a session log, in event order."""
    signatures = []
    for event in session.events:
        if event.kind == "operator_applied":
            params = event.payload.get("params", {}) if event.payload else {}
            signatures.append(Signature(event.payload.get("op", "?"), params.get("attribute")))
        elif event.kind == "interpretation_chosen":
            signatures.append(Signature("query"))
    return signatures


def train_transitions(logs, alpha: float = DEFAULT_ALPHA) -> TransitionModel:
    """Count consecutive signature pairs within each session."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    model = TransitionModel(alpha=alpha)
    for session in logs:
        signatures = _session_signatures(session)
        for source, target in zip(signatures, signatures[1:]):
            model.observe(source, target)
        for signature in signatures:  # single-step sessions still widen the support
            model.signatures.add(signature.name)
    return model


# Suggested parameters per operator, instantiated against the current table.
_RECOMMENDABLE_OPS = ("by_filter", "by_facet", "by_analytics", "by_example", "by_overlap", "by_join")


def _instantiate(
    signature: Signature, catalog: Catalog, graph, base_table: str
) -> Optional[dict]:
    """Parameter suggestion for a signature on the current table, or None
    when the signature cannot apply there."""
    table = catalog.table(base_table)
    if signature.op not in _RECOMMENDABLE_OPS:
        return None
    attribute = signature.attribute
    if signature.op == "by_overlap":
        return {"op": "by_overlap", "params": {"min_overlap": 1}}
    if signature.op == "by_join":
        edges = graph.edges_of(base_table) if graph is not None else []
        if not edges:
            return None
        neighbor = sorted(edge.other(base_table) for edge in edges)[0]
        return {"op": "by_join", "params": {"path": [neighbor]}}
    if attribute is None or not table.has_column(attribute):
        return None
    kind = table.column(attribute).kind
    if signature.op == "by_facet":
        if kind != "categorical":
            return None
        return {"op": "by_facet", "params": {"attribute": attribute}}
    if signature.op == "by_filter":
        values = sorted(
            {v for v in table.values(attribute) if v is not None},
            key=lambda v: (str(type(v).__name__), v),
        )
        if not values:
            return None
        return {"op": "by_filter", "params": {"attribute": attribute, "op": "=", "value": values[0]}}
    if signature.op == "by_analytics":
        return {"op": "by_analytics", "params": {"attribute": attribute, "mode": "similar"}}
    if signature.op == "by_example":
        if kind != "numeric":
            return None
        return {
            "op": "by_example",
            "params": {"features": [attribute], "metric": "euclidean", "k": 3},
        }
    return None


def warm_start(
    model: TransitionModel,
    session,
    current_set: EntitySet,
    k: int,
    novelty_weight: float,
    catalog: Catalog,
    graph=None,
) -> list[Recommendation]:
    """Rank possible next operators given the session's last step."""
    if not 0.0 <= novelty_weight <= 1.0:
        raise ValueError("novelty weight must be in [0, 1]")
    signatures = _session_signatures(session)
    if not signatures:
        raise EmptySession("warm start needs at least one step in the session")
    last = signatures[-1]
    seen = {signature.name for signature in signatures}
    probabilities = model.probabilities(last)

    scored = []
    for name in sorted(probabilities):
        signature = Signature.parse(name)
        payload = _instantiate(signature, catalog, graph, current_set.base_table)
        if payload is None:
            continue
        novelty = 1.0 if name not in seen else 0.0
        score = (1.0 - novelty_weight) * probabilities[name] + novelty_weight * novelty
        if novelty == 1.0:
            rationale = f"Unexplored in this session; a candidate after {last.name}."
        else:
            rationale = f"Often follows {last.name}."
        scored.append((score, name, Recommendation("next_operator", payload, score, rationale)))
    scored.sort(key=lambda entry: (-entry[0], entry[1]))
    return [recommendation for _, _, recommendation in scored[: max(k, 0)]]
