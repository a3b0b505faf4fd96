"""Data exploration pipelines: definition, execution, serialization,
session logging, replay, and the evaluation metrics.

A pipeline (DEP) is an ordered list of operator steps whose inputs
reference earlier steps (or the catalog). Execution is deterministic:
two runs over the same catalog produce identical outputs, which is what
makes recorded sessions replayable and divergence detectable; per-step
latency and a memory estimate (8 bytes per materialized id or cell) are
captured as metrics.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Any, Optional

from dataplore.catalog import Catalog
from dataplore.errors import (
    BaseTableMismatch,
    EmptyGold,
    ReplayDivergence,
    SchemaViolation,
    StepFailure,
    UnknownOperator,
    UnknownVersion,
)
from dataplore.ops import (
    AnalyticsMatch,
    CoverResult,
    FacetResult,
    SimilaritySpec,
    by_analytics,
    by_example,
    by_facet,
    by_filter,
    by_join,
    by_overlap,
    by_superset,
    full_set,
    resolve_join_path,
)
from dataplore.query import QueryAst, ResultTable, ast_to_set, eval_in_memory
from dataplore.sets import EntitySet, OverlapIndex

DEP_VERSION = "1"

EVENT_KINDS = (
    "nl_query",
    "interpretation_chosen",
    "operator_applied",
    "recommendation_shown",
    "recommendation_accepted",
    "recommendation_rejected",
    "backtrack",
)
# every kind except recommendation_shown is a user interaction
INTERACTION_KINDS = tuple(k for k in EVENT_KINDS if k != "recommendation_shown")


# -- DEP definition and file format ------------------------------------------------


@dataclass(frozen=True)
class DepStep:
    id: str
    op: str
    params: dict
    inputs: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {"id": self.id, "op": self.op, "params": self.params, "inputs": list(self.inputs)}


@dataclass
class Dep:
    steps: list[DepStep] = field(default_factory=list)
    version: str = DEP_VERSION

    def to_json(self) -> dict:
        return {"version": self.version, "steps": [step.to_json() for step in self.steps]}


def dep_from_json(doc: dict) -> Dep:
    """Parse and validate the DEP document shape."""
    if not isinstance(doc, dict):
        raise SchemaViolation("a DEP document must be a JSON object")
    version = doc.get("version")
    if version != DEP_VERSION:
        raise UnknownVersion(f"unsupported DEP version {version!r}, expected {DEP_VERSION!r}")
    raw_steps = doc.get("steps")
    if not isinstance(raw_steps, list):
        raise SchemaViolation("DEP document needs a 'steps' list")
    steps = []
    seen_ids: set[str] = set()
    for position, raw in enumerate(raw_steps):
        if not isinstance(raw, dict):
            raise SchemaViolation(f"step {position} is not an object")
        for fld in ("id", "op"):
            if not isinstance(raw.get(fld), str) or not raw.get(fld):
                raise SchemaViolation(f"step {position} is missing field {fld!r}")
        step_id = raw["id"]
        if step_id in seen_ids:
            raise SchemaViolation(f"duplicate step id {step_id!r}")
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise SchemaViolation(f"step {step_id!r}: params must be an object")
        inputs = raw.get("inputs", [])
        if not isinstance(inputs, list) or not all(isinstance(i, str) for i in inputs):
            raise SchemaViolation(f"step {step_id!r}: inputs must be a list of step ids")
        for ref in inputs:
            if ref != "catalog" and ref not in seen_ids:
                raise SchemaViolation(
                    f"step {step_id!r} references {ref!r}, which is not an earlier step"
                )
        seen_ids.add(step_id)
        steps.append(DepStep(id=step_id, op=raw["op"], params=params, inputs=tuple(inputs)))
    return Dep(steps=steps, version=version)


def load_dep(path) -> Dep:
    with open(path, encoding="utf-8") as handle:
        return dep_from_json(json.load(handle))


def save_dep(dep: Dep, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(dep.to_json(), handle, indent=2)


# -- session log --------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    timestamp: float
    kind: str
    payload: dict
    latency_ms: float = 0.0
    result_size: int = 0
    memory_bytes_estimate: int = 0
    clicks: int = 0

    def to_json(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "kind": self.kind,
            "payload": self.payload,
            "latency_ms": self.latency_ms,
            "result_size": self.result_size,
            "memory_bytes_estimate": self.memory_bytes_estimate,
            "clicks": self.clicks,
        }


class SessionLog:
    """Append-only, time-ordered interaction events for one session."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.events: list[Event] = []

    def append(self, event: Event) -> None:
        if event.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {event.kind!r}")
        if event.latency_ms < 0:
            raise ValueError("latency must be >= 0")
        if self.events and event.timestamp < self.events[-1].timestamp:
            raise ValueError("event timestamps must be non-decreasing")
        if event.kind == "interpretation_chosen" and not any(
            e.kind == "nl_query" for e in self.events
        ):
            raise ValueError("interpretation_chosen must follow an nl_query")
        self.events.append(event)

    def record(self, kind: str, payload: dict, *, latency_ms: float = 0.0,
               result_size: int = 0, memory_bytes_estimate: int = 0, clicks: int = 0) -> Event:
        """Append a fresh event stamped with a non-decreasing wall-clock time."""
        timestamp = time.time()
        if self.events:
            timestamp = max(timestamp, self.events[-1].timestamp)
        event = Event(
            timestamp=timestamp,
            kind=kind,
            payload=payload,
            latency_ms=latency_ms,
            result_size=result_size,
            memory_bytes_estimate=memory_bytes_estimate,
            clicks=clicks,
        )
        self.append(event)
        return event

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e.to_json(), sort_keys=True) for e in self.events) + (
            "\n" if self.events else ""
        )

    @classmethod
    def from_jsonl(cls, session_id: str, text: str) -> "SessionLog":
        log = cls(session_id)
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            log.append(
                Event(
                    timestamp=doc["timestamp"],
                    kind=doc["kind"],
                    payload=doc.get("payload", {}),
                    latency_ms=doc.get("latency_ms", 0.0),
                    result_size=doc.get("result_size", 0),
                    memory_bytes_estimate=doc.get("memory_bytes_estimate", 0),
                    clicks=doc.get("clicks", 0),
                )
            )
        return log


# -- step outputs: size, memory, canonical form ---------------------------------------


def result_cardinality(output: Any) -> int:
    if isinstance(output, EntitySet):
        return len(output)
    if isinstance(output, FacetResult):
        return len(output.buckets)
    if isinstance(output, ResultTable):
        return len(output.rows)
    if isinstance(output, CoverResult):
        return len(output.cover)
    if isinstance(output, list):
        return len(output)
    return 0


def memory_estimate(output: Any) -> int:
    """Bytes of materialized output: 8 per id and 8 per table cell."""
    if isinstance(output, EntitySet):
        return 8 * len(output)
    if isinstance(output, FacetResult):
        return 8 * sum(bucket.count for bucket in output.buckets)
    if isinstance(output, ResultTable):
        return 8 * len(output.rows) * len(output.headers)
    if isinstance(output, CoverResult):
        return 8 * len(output.cover) + 8 * len(output.uncovered)
    if isinstance(output, list):
        total = 0
        for entry in output:
            if isinstance(entry, AnalyticsMatch):
                total += 8 + 8 * len(entry.candidate)
            elif isinstance(entry, tuple) and entry and isinstance(entry[0], EntitySet):
                total += 8 + 8 * len(entry[0])
            else:
                total += 16  # (id, distance) pair
        return total
    return 0


def canonical_output(output: Any) -> dict:
    """JSON shape used for digests and replay comparison."""
    if isinstance(output, EntitySet):
        return {"kind": "set", "base_table": output.base_table, "ids": list(output.ids)}
    if isinstance(output, FacetResult):
        return {"kind": "facet", **output.to_json()}
    if isinstance(output, ResultTable):
        return {"kind": "table", **output.to_json()}
    if isinstance(output, CoverResult):
        return {"kind": "cover", **output.to_json()}
    if isinstance(output, list):
        entries = []
        for entry in output:
            if isinstance(entry, AnalyticsMatch):
                entries.append([entry.candidate_index, entry.divergence])
            elif isinstance(entry, tuple) and entry and isinstance(entry[0], EntitySet):
                entries.append([canonical_output(entry[0]), entry[1]])
            else:
                entries.append([entry[0], entry[1]])
        return {"kind": "ranking", "entries": entries}
    raise TypeError(f"cannot canonicalize output of type {type(output).__name__}")


def output_digest(output: Any) -> str:
    canonical = json.dumps(canonical_output(output), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# -- metrics ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepMetrics:
    step_id: str
    op: str
    latency_ms: float
    memory_bytes_estimate: int
    result_cardinality: int

    def to_json(self) -> dict:
        return {
            "step_id": self.step_id,
            "op": self.op,
            "latency_ms": self.latency_ms,
            "memory_bytes_estimate": self.memory_bytes_estimate,
            "result_cardinality": self.result_cardinality,
        }


@dataclass(frozen=True)
class DepMetrics:
    steps: tuple[StepMetrics, ...]
    total_latency_ms: float
    peak_memory_bytes: int
    step_count: int
    backtrack_count: int

    @classmethod
    def aggregate(cls, steps, backtrack_count: int = 0) -> "DepMetrics":
        steps = tuple(steps)
        return cls(
            steps=steps,
            total_latency_ms=sum(s.latency_ms for s in steps),
            peak_memory_bytes=max((s.memory_bytes_estimate for s in steps), default=0),
            step_count=len(steps),
            backtrack_count=backtrack_count,
        )

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json() for s in self.steps],
            "total_latency_ms": self.total_latency_ms,
            "peak_memory_bytes": self.peak_memory_bytes,
            "step_count": self.step_count,
            "backtrack_count": self.backtrack_count,
        }


# -- execution -------------------------------------------------------------------------


class Executor:
    """Runs registered operators over a catalog, keeping step outputs,
    per-step metrics, and the overlap index of every set produced."""

    def __init__(self, catalog: Catalog, graph=None, taxonomy=None):
        self.catalog = catalog
        self.graph = graph
        self.taxonomy = taxonomy
        self.index = OverlapIndex()
        self.outputs: dict[str, Any] = {}
        self.metrics: list[StepMetrics] = []

    # operator implementations ------------------------------------------------

    def _op_scan(self, inputs, params):
        return full_set(self.catalog, params["table"])

    def _op_query(self, inputs, params):
        ast = QueryAst.from_json(params["ast"])
        if ast.group_by is not None:
            return eval_in_memory(ast, self.catalog)
        return ast_to_set(ast, self.catalog)

    def _op_by_filter(self, inputs, params):
        (entity_set,) = inputs
        return by_filter(
            self.catalog, entity_set, params["attribute"], params["op"], params["value"]
        )

    def _op_by_facet(self, inputs, params):
        (entity_set,) = inputs
        return by_facet(self.catalog, entity_set, params["attribute"])

    def _op_by_example(self, inputs, params):
        (entity_set,) = inputs
        spec = SimilaritySpec(
            features=tuple(params.get("features", ())),
            metric=params.get("metric", "euclidean"),
            k=params.get("k", 5),
            taxonomy=self.taxonomy if params.get("metric") == "semantic" else None,
        )
        return by_example(self.catalog, entity_set, spec)

    def _op_by_overlap(self, inputs, params):
        (entity_set,) = inputs
        return by_overlap(entity_set, self.index, params.get("min_overlap", 1))

    def _op_by_join(self, inputs, params):
        (entity_set,) = inputs
        if self.graph is None:
            raise BrokenGraph("by_join needs a schema graph")
        edges = resolve_join_path(self.graph, entity_set.base_table, params["path"])
        return by_join(self.catalog, entity_set, edges)

    def _op_by_superset(self, inputs, params):
        target, *candidates = inputs
        return by_superset(target, candidates)

    def _op_by_analytics(self, inputs, params):
        entity_set, *candidates = inputs
        return by_analytics(
            self.catalog,
            entity_set,
            params["attribute"],
            candidates,
            params.get("mode", "similar"),
        )

    _OPERATORS = {
        "scan": _op_scan,
        "query": _op_query,
        "by_filter": _op_by_filter,
        "by_facet": _op_by_facet,
        "by_example": _op_by_example,
        "by_overlap": _op_by_overlap,
        "by_join": _op_by_join,
        "by_superset": _op_by_superset,
        "by_analytics": _op_by_analytics,
    }

    @classmethod
    def operator_names(cls):
        return tuple(cls._OPERATORS)

    # ----------------------------------------------------------------------------

    def _resolve_inputs(self, step: DepStep):
        resolved = []
        for ref in step.inputs:
            if ref == "catalog":
                continue  # scans read the catalog implicitly
            if ref not in self.outputs:
                raise SchemaViolation(f"step {step.id!r} references unknown step {ref!r}")
            resolved.append(self.outputs[ref])
        return resolved

    def run_step(self, step: DepStep) -> Any:
        operator = self._OPERATORS.get(step.op)
        if operator is None:
            raise UnknownOperator(f"no operator named {step.op!r}")
        inputs = self._resolve_inputs(step)
        started = time.perf_counter()
        output = operator(self, inputs, step.params)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if isinstance(output, EntitySet):
            output = output.with_provenance(step.id)
            self.index.ensure(output)
        self.outputs[step.id] = output
        self.metrics.append(
            StepMetrics(
                step_id=step.id,
                op=step.op,
                latency_ms=elapsed_ms,
                memory_bytes_estimate=memory_estimate(output),
                result_cardinality=result_cardinality(output),
            )
        )
        return output


class BrokenGraph(SchemaViolation):
    pass


def run_dep(dep: Dep, catalog: Catalog, graph=None, taxonomy=None) -> tuple[dict, DepMetrics]:
    """Execute every step in order; halt at the first failure.

    On failure raises StepFailure carrying the failing step id, the
    underlying error, and everything produced before the failure.
    """
    executor = Executor(catalog, graph=graph, taxonomy=taxonomy)
    for step in dep.steps:
        try:
            executor.run_step(step)
        except Exception as exc:  # noqa: BLE001 - every operator error stops the run
            raise StepFailure(
                step.id,
                exc,
                outputs=dict(executor.outputs),
                metrics=list(executor.metrics),
            ) from exc
    return executor.outputs, DepMetrics.aggregate(executor.metrics)


# -- evaluation metrics -------------------------------------------------------------


def accuracy(result: EntitySet, gold: EntitySet) -> tuple[float, float, float]:
    """Precision, recall, F1 of a result set against a gold set.

    An empty result has precision 1.0 by convention (it asserted
    nothing false); F1 is 0 when both components are 0.
    """
    if result.base_table != gold.base_table:
        raise BaseTableMismatch("result and gold sets range over different tables")
    if not gold.ids:
        raise EmptyGold("gold set must be non-empty")
    hits = len(set(result.ids) & set(gold.ids))
    precision = hits / len(result.ids) if result.ids else 1.0
    recall = hits / len(gold.ids)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def controllability(session: SessionLog) -> Optional[float]:
    """Inverse of the user-interaction count; None for an untouched session."""
    interactions = sum(1 for e in session.events if e.kind in INTERACTION_KINDS)
    return 1.0 / interactions if interactions else None


# -- replay ---------------------------------------------------------------------------


def replay(log: SessionLog, catalog: Catalog, graph=None, taxonomy=None) -> dict:
    """Re-execute every step recorded in a session log.

    Each executable event carries its full parameters and the digest of
    the output it produced; any mismatch raises ReplayDivergence naming
    the first divergent step, which signals either a nondeterminism bug
    or a changed catalog.
    """
    executor = Executor(catalog, graph=graph, taxonomy=taxonomy)
    for event in log.events:
        payload = event.payload
        if event.kind == "operator_applied" or (
            event.kind == "recommendation_accepted" and "op" in payload
        ):
            step = DepStep(
                id=payload["step_id"],
                op=payload["op"],
                params=payload.get("params", {}),
                inputs=tuple(payload.get("inputs", ())),
            )
        elif event.kind == "interpretation_chosen" or (
            event.kind == "recommendation_accepted" and "ast" in payload
        ):
            step = DepStep(
                id=payload["step_id"],
                op="query",
                params={"ast": payload["ast"]},
                inputs=("catalog",),
            )
        else:
            continue
        try:
            output = executor.run_step(step)
        except Exception as exc:  # noqa: BLE001
            raise ReplayDivergence(
                step.id, f"step {step.id!r} failed on replay: {exc}"
            ) from exc
        expected = payload.get("result_digest")
        if expected is not None and output_digest(output) != expected:
            raise ReplayDivergence(
                step.id, f"step {step.id!r} reproduced a different output"
            )
    return executor.outputs
