"""HTTP gateway: sessions, NL querying, operator steps, recommendations,
explanations, backtracking, and evaluation metrics over JSON bodies.

Every mutating request appends exactly one session-log event (GETs
append only recommendation_shown); mutations on one session are
serialized — a concurrent second writer gets 409 instead of queueing.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from dataplore.catalog import profile_catalog
from dataplore.config import ServiceConfig
from dataplore.dataset import Dataset, load_dataset
from dataplore.errors import (
    ExploreError,
    InvalidBacktrack,
    NoCurrentSet,
    NoPendingInterpretations,
    SessionBusy,
    UnknownDataset,
    UnknownOperator,
    UnknownSession,
    UnknownStep,
)
from dataplore.explain import explain_query
from dataplore.guide import TransitionModel, cold_start, train_transitions, warm_start
from dataplore.nl import Interpretation, interpret
from dataplore.ops import CoverResult, FacetResult
from dataplore.pipeline import (
    Dep,
    DepMetrics,
    DepStep,
    Executor,
    SessionLog,
    controllability,
    output_digest,
    result_cardinality,
    memory_estimate,
)
from dataplore.query import QueryAst, ResultTable, compile_to_sql
from dataplore.sets import EntitySet


def render_output(output: Any, dataset: Dataset) -> dict:
    """JSON view of a step output; sets are materialized with their rows."""
    if isinstance(output, EntitySet):
        table = dataset.catalog.table(output.base_table)
        return {
            "kind": "set",
            "base_table": output.base_table,
            "size": len(output),
            "ids": list(output.ids),
            "headers": table.column_names(),
            "rows": [list(table.row(i)) for i in output.ids],
        }
    if isinstance(output, FacetResult):
        return {"kind": "facet", **output.to_json()}
    if isinstance(output, ResultTable):
        return {"kind": "table", **output.to_json()}
    if isinstance(output, CoverResult):
        return {"kind": "cover", **output.to_json()}
    if isinstance(output, list):
        entries = []
        for entry in output:
            if isinstance(entry, tuple) and entry and isinstance(entry[0], EntitySet):
                entries.append({"set": entry[0].to_json(), "overlap": entry[1]})
            elif hasattr(entry, "candidate_index"):
                entries.append(
                    {"candidate_index": entry.candidate_index, "divergence": entry.divergence}
                )
            else:
                entries.append({"id": entry[0], "distance": entry[1]})
        return {"kind": "ranking", "entries": entries}
    return {"kind": "unknown"}


class Session:
    """One exploration session: dataset, executed steps, and the log."""

    def __init__(self, session_id: str, dataset: Dataset, persist_dir: Optional[Path]):
        self.id = session_id
        self.dataset = dataset
        self.executor = Executor(dataset.catalog, dataset.graph, dataset.taxonomy)
        self.dep = Dep()
        self.log = SessionLog(session_id)
        self.current_step: Optional[str] = None
        self.last_interpretations: list[Interpretation] = []
        self.last_recommendations: list[dict] = []
        self.backtracks = 0
        self.lock = threading.Lock()
        self._step_counter = 0
        self._persist_path = persist_dir / f"{session_id}.jsonl" if persist_dir else None

    def next_step_id(self) -> str:
        self._step_counter += 1
        return f"s{self._step_counter}"

    def record(self, kind: str, payload: dict, **kwargs) -> None:
        event = self.log.record(kind, payload, **kwargs)
        if self._persist_path is not None:
            with open(self._persist_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(event.to_json(), sort_keys=True) + "\n")

    def current_set(self) -> EntitySet:
        if self.current_step is None:
            raise NoCurrentSet("no current set yet; run a query or a scan step first")
        output = self.executor.outputs[self.current_step]
        assert isinstance(output, EntitySet)
        return output

    def run_recorded_step(self, step: DepStep) -> Any:
        output = self.executor.run_step(step)
        self.dep.steps.append(step)
        if isinstance(output, EntitySet):
            self.current_step = step.id
        return output


class _CreateSession(BaseModel):
    dataset: str = "fixture"


class _QueryRequest(BaseModel):
    question: str
    n: int = 3


class _ChooseRequest(BaseModel):
    interpretation_index: int


class _StepRequest(BaseModel):
    op: str
    params: dict = {}


class _BacktrackRequest(BaseModel):
    step_id: str


class _RecommendationChoice(BaseModel):
    index: int


def _http_status(error: ExploreError) -> int:
    if isinstance(error, (UnknownSession, UnknownStep)):
        return 404
    if isinstance(error, SessionBusy):
        return 409
    return 400


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="dataplore", version="0.1.0")

    persist_dir: Optional[Path] = None
    if config.persist_dir:
        persist_dir = Path(config.persist_dir)
        persist_dir.mkdir(parents=True, exist_ok=True)

    datasets: dict[str, Dataset] = {}
    profiles_cache: dict[str, dict] = {}
    sessions: dict[str, Session] = {}

    base_model = TransitionModel()
    if config.model_path and Path(config.model_path).exists():
        base_model = TransitionModel.load(config.model_path)
    elif persist_dir is not None:
        logs = []
        for log_file in sorted(persist_dir.glob("*.jsonl")):
            logs.append(SessionLog.from_jsonl(log_file.stem, log_file.read_text("utf-8")))
        if logs:
            base_model = train_transitions(logs)

    app.state.config = config
    app.state.sessions = sessions

    def get_dataset(name: str) -> Dataset:
        if name not in config.datasets:
            raise UnknownDataset(f"no dataset named {name!r}")
        if name not in datasets:
            datasets[name] = load_dataset(config.datasets[name])
        return datasets[name]

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def acquire(session: Session):
        if not session.lock.acquire(blocking=False):
            raise SessionBusy(f"session {session.id!r} has a mutation in flight")
        return session.lock

    @app.exception_handler(ExploreError)
    async def explore_error_handler(request: Request, error: ExploreError):
        return JSONResponse(status_code=_http_status(error), content=error.to_json())

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: _CreateSession):
        dataset = get_dataset(body.dataset)
        session_id = uuid.uuid4().hex[:12]
        sessions[session_id] = Session(session_id, dataset, persist_dir)
        return {"session_id": session_id, "dataset": body.dataset}

    @app.post("/sessions/{session_id}/query")
    def post_query(session_id: str, body: _QueryRequest):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            started = time.perf_counter()
            interpretations = interpret(
                body.question, session.dataset.graph, session.dataset.catalog, n=body.n
            )
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            session.last_interpretations = interpretations
            session.record(
                "nl_query",
                {"question": body.question, "n": body.n,
                 "interpretation_count": len(interpretations)},
                latency_ms=elapsed_ms,
                result_size=len(interpretations),
                clicks=1,
            )
            return {
                "interpretations": [
                    {
                        "ast": it.ast.to_json(),
                        "sql": compile_to_sql(it.ast, session.dataset.catalog),
                        "nl_explanation": explain_query(it.ast, session.dataset.graph),
                        "score": it.score,
                        "bindings": it.to_json()["bindings"],
                        "unmatched": list(it.unmatched),
                    }
                    for it in interpretations
                ]
            }
        finally:
            lock.release()

    def _execute_query_step(session: Session, ast: QueryAst, kind: str) -> dict:
        step = DepStep(
            id=session.next_step_id(), op="query", params={"ast": ast.to_json()},
            inputs=("catalog",),
        )
        output = session.run_recorded_step(step)
        metrics = session.executor.metrics[-1]
        session.record(
            kind,
            {"step_id": step.id, "ast": ast.to_json(), "result_digest": output_digest(output)},
            latency_ms=metrics.latency_ms,
            result_size=metrics.result_cardinality,
            memory_bytes_estimate=metrics.memory_bytes_estimate,
            clicks=1,
        )
        return {
            "step_id": step.id,
            "result": render_output(output, session.dataset),
            "metrics": metrics.to_json(),
        }

    @app.post("/sessions/{session_id}/choose")
    def post_choose(session_id: str, body: _ChooseRequest):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            if not session.last_interpretations:
                raise NoPendingInterpretations("run a query before choosing an interpretation")
            if not 0 <= body.interpretation_index < len(session.last_interpretations):
                raise UnknownStep(
                    f"interpretation index {body.interpretation_index} out of range"
                )
            chosen = session.last_interpretations[body.interpretation_index]
            return _execute_query_step(session, chosen.ast, "interpretation_chosen")
        finally:
            lock.release()

    def _step_inputs(session: Session, op: str, params: dict) -> tuple[str, ...]:
        if op in ("scan", "query"):
            return ("catalog",)
        session.current_set()  # raises NoCurrentSet when nothing ran yet
        inputs = [session.current_step]
        for ref in params.get("candidates", ()):
            if ref not in session.executor.outputs:
                raise UnknownStep(f"candidate step {ref!r} does not exist")
            inputs.append(ref)
        return tuple(inputs)

    @app.post("/sessions/{session_id}/steps")
    def post_step(session_id: str, body: _StepRequest):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            if body.op not in Executor.operator_names():
                raise UnknownOperator(f"no operator named {body.op!r}")
            params = dict(body.params)
            candidates = params.pop("candidates", None)
            step_params = dict(params)
            raw_inputs = _step_inputs(
                session, body.op, {"candidates": candidates or ()}
            )
            step = DepStep(
                id=session.next_step_id(), op=body.op, params=step_params, inputs=raw_inputs
            )
            output = session.run_recorded_step(step)
            metrics = session.executor.metrics[-1]
            session.record(
                "operator_applied",
                {
                    "step_id": step.id,
                    "op": body.op,
                    "params": step_params,
                    "inputs": list(raw_inputs),
                    "result_digest": output_digest(output),
                },
                latency_ms=metrics.latency_ms,
                result_size=metrics.result_cardinality,
                memory_bytes_estimate=metrics.memory_bytes_estimate,
                clicks=1,
            )
            return {
                "step_id": step.id,
                "result": render_output(output, session.dataset),
                "metrics": metrics.to_json(),
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/recommendations")
    def get_recommendations(
        session_id: str,
        k: int = 5,
        novelty: Optional[float] = Query(default=None, alias="lambda"),
    ):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            novelty_weight = config.novelty_default if novelty is None else novelty
            dataset = session.dataset
            if not session.dep.steps:
                if dataset.name not in profiles_cache:
                    profiles_cache[dataset.name] = profile_catalog(dataset.catalog)
                recommendations = cold_start(dataset.catalog, profiles_cache[dataset.name], k)
                mode = "cold_start"
            else:
                model = TransitionModel(
                    alpha=base_model.alpha,
                    counts={s: dict(r) for s, r in base_model.counts.items()},
                    signatures=set(base_model.signatures),
                )
                trained = train_transitions([session.log])
                for source, row in trained.counts.items():
                    for target, count in row.items():
                        model.counts.setdefault(source, {})
                        model.counts[source][target] = (
                            model.counts[source].get(target, 0.0) + count
                        )
                model.signatures |= trained.signatures
                recommendations = warm_start(
                    model,
                    session.log,
                    session.current_set(),
                    k,
                    novelty_weight,
                    dataset.catalog,
                    dataset.graph,
                )
                mode = "warm_start"
            rendered = []
            for rec in recommendations:
                body = rec.to_json()
                if isinstance(rec.payload, QueryAst):
                    body["sql"] = compile_to_sql(rec.payload, dataset.catalog)
                    body["nl_explanation"] = explain_query(rec.payload, dataset.graph)
                rendered.append(body)
            session.last_recommendations = rendered
            session.record(
                "recommendation_shown",
                {"mode": mode, "k": k, "lambda": novelty_weight,
                 "items": [r["kind"] for r in rendered]},
                result_size=len(rendered),
            )
            return {"mode": mode, "recommendations": rendered}
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/recommendations/accept")
    def accept_recommendation(session_id: str, body: _RecommendationChoice):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            if not 0 <= body.index < len(session.last_recommendations):
                raise UnknownStep(f"recommendation index {body.index} out of range")
            rec = session.last_recommendations[body.index]
            if rec["kind"] == "starter_query":
                ast = QueryAst.from_json(rec["payload"])
                step = DepStep(
                    id=session.next_step_id(), op="query",
                    params={"ast": ast.to_json()}, inputs=("catalog",),
                )
                payload: dict = {"step_id": step.id, "ast": ast.to_json()}
            else:
                op = rec["payload"]["op"]
                params = rec["payload"].get("params", {})
                if op in ("scan", "query"):
                    inputs: tuple[str, ...] = ("catalog",)
                else:
                    session.current_set()
                    inputs = (session.current_step,)
                step = DepStep(id=session.next_step_id(), op=op, params=params, inputs=inputs)
                payload = {"step_id": step.id, "op": op, "params": params,
                           "inputs": list(inputs)}
            output = session.run_recorded_step(step)
            metrics = session.executor.metrics[-1]
            payload["result_digest"] = output_digest(output)
            session.record(
                "recommendation_accepted",
                payload,
                latency_ms=metrics.latency_ms,
                result_size=metrics.result_cardinality,
                memory_bytes_estimate=metrics.memory_bytes_estimate,
                clicks=1,
            )
            return {
                "step_id": step.id,
                "result": render_output(output, session.dataset),
                "metrics": metrics.to_json(),
            }
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/recommendations/reject")
    def reject_recommendation(session_id: str, body: _RecommendationChoice):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            if not 0 <= body.index < len(session.last_recommendations):
                raise UnknownStep(f"recommendation index {body.index} out of range")
            session.record(
                "recommendation_rejected",
                {"index": body.index, "item": session.last_recommendations[body.index]["kind"]},
                clicks=1,
            )
            return {"rejected": body.index}
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/pipeline")
    def get_pipeline(session_id: str):
        session = get_session(session_id)
        doc = session.dep.to_json()
        doc["current_step"] = session.current_step
        return doc

    @app.post("/sessions/{session_id}/backtrack")
    def post_backtrack(session_id: str, body: _BacktrackRequest):
        session = get_session(session_id)
        lock = acquire(session)
        try:
            output = session.executor.outputs.get(body.step_id)
            if output is None:
                raise UnknownStep(f"no step {body.step_id!r} in this session")
            if not isinstance(output, EntitySet):
                raise InvalidBacktrack(f"step {body.step_id!r} did not produce an entity set")
            session.current_step = body.step_id
            session.backtracks += 1
            session.record("backtrack", {"step_id": body.step_id}, clicks=1)
            return {
                "current_step": body.step_id,
                "result": render_output(output, session.dataset),
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        session = get_session(session_id)
        metrics = DepMetrics.aggregate(session.executor.metrics, session.backtracks)
        return {"metrics": metrics.to_json(), "controllability": controllability(session.log)}

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        session = get_session(session_id)
        return PlainTextResponse(session.log.to_jsonl(), media_type="application/jsonl")

    if config.ui_dir and Path(config.ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
