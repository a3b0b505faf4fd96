"""Pipeline execution, serialization, session logs, metrics, and replay."""

from __future__ import annotations

import json
import random

import pytest

from dataplore.catalog import ingest_csv
from dataplore.dataset import fixture_path, load_dataset
from dataplore.errors import (
    BaseTableMismatch,
    EmptyGold,
    ReplayDivergence,
    SchemaViolation,
    StepFailure,
    UnknownVersion,
)
from dataplore.pipeline import (
    Dep,
    DepMetrics,
    DepStep,
    Event,
    Executor,
    SessionLog,
    accuracy,
    controllability,
    dep_from_json,
    load_dep,
    output_digest,
    replay,
    run_dep,
    save_dep,
)
from dataplore.sets import EntitySet

FIXTURE_DEP = fixture_path().parent / "dep_filter_facet.json"


def interaction_event(timestamp, kind="operator_applied", payload=None):
    return Event(timestamp=timestamp, kind=kind, payload=payload or {})


class TestDepIo:
    def test_round_trip(self, tmp_path):
        dep = load_dep(FIXTURE_DEP)
        path = tmp_path / "copy.json"
        save_dep(dep, path)
        assert load_dep(path) == dep

    def test_unknown_version(self):
        with pytest.raises(UnknownVersion):
            dep_from_json({"version": "v99", "steps": []})

    def test_missing_operator_field(self):
        with pytest.raises(SchemaViolation):
            dep_from_json({"version": "1", "steps": [{"id": "s1", "params": {}}]})

    def test_forward_reference_rejected(self):
        with pytest.raises(SchemaViolation):
            dep_from_json(
                {
                    "version": "1",
                    "steps": [
                        {"id": "s1", "op": "by_filter", "params": {}, "inputs": ["s2"]},
                        {"id": "s2", "op": "scan", "params": {}, "inputs": []},
                    ],
                }
            )

    def test_duplicate_step_id_rejected(self):
        with pytest.raises(SchemaViolation):
            dep_from_json(
                {
                    "version": "1",
                    "steps": [
                        {"id": "s1", "op": "scan", "params": {}},
                        {"id": "s1", "op": "scan", "params": {}},
                    ],
                }
            )


class TestRunDep:
    def test_fixture_dep(self, dataset):
        dep = load_dep(FIXTURE_DEP)
        outputs, metrics = run_dep(dep, dataset.catalog, dataset.graph)
        facet = outputs["s3"]
        assert [(b.value, b.members.ids) for b in facet.buckets] == [
            ("2018", ("p1",)),
            ("2019", ("p2",)),
            ("2021", ("p6",)),
        ]
        assert metrics.step_count == 3
        assert outputs["s2"].provenance == "s2"

    def test_empty_dep(self, dataset):
        outputs, metrics = run_dep(Dep(), dataset.catalog)
        assert outputs == {}
        assert metrics.total_latency_ms == 0.0
        assert metrics.step_count == 0

    def test_unknown_operator_fails_at_its_step(self, dataset):
        dep = dep_from_json(
            {
                "version": "1",
                "steps": [
                    {"id": "s1", "op": "scan", "params": {"table": "projects"}, "inputs": ["catalog"]},
                    {"id": "s2", "op": "by_teleport", "params": {}, "inputs": ["s1"]},
                ],
            }
        )
        with pytest.raises(StepFailure) as caught:
            run_dep(dep, dataset.catalog)
        assert caught.value.step_id == "s2"
        assert "s1" in caught.value.outputs  # prior outputs preserved

    def test_deterministic_outputs(self, dataset):
        dep = load_dep(FIXTURE_DEP)
        first, metrics_a = run_dep(dep, dataset.catalog, dataset.graph)
        second, metrics_b = run_dep(dep, dataset.catalog, dataset.graph)
        assert {k: output_digest(v) for k, v in first.items()} == {
            k: output_digest(v) for k, v in second.items()
        }
        assert [m.result_cardinality for m in metrics_a.steps] == [
            m.result_cardinality for m in metrics_b.steps
        ]

    def test_overlap_step_sees_earlier_sets(self, dataset):
        dep = dep_from_json(
            {
                "version": "1",
                "steps": [
                    {"id": "s1", "op": "scan", "params": {"table": "projects"}, "inputs": ["catalog"]},
                    {"id": "s2", "op": "by_filter",
                     "params": {"attribute": "country", "op": "=", "value": "FR"},
                     "inputs": ["s1"]},
                    {"id": "s3", "op": "by_overlap", "params": {"min_overlap": 1}, "inputs": ["s2"]},
                ],
            }
        )
        outputs, _ = run_dep(dep, dataset.catalog, dataset.graph)
        overlaps = outputs["s3"]
        assert [(s.ids, n) for s, n in overlaps] == [(tuple("p%d" % i for i in range(1, 7)), 3)]

    def test_metrics_aggregates_recomputable(self, dataset):
        dep = load_dep(FIXTURE_DEP)
        _, metrics = run_dep(dep, dataset.catalog, dataset.graph)
        assert metrics.total_latency_ms == pytest.approx(
            sum(step.latency_ms for step in metrics.steps)
        )
        assert metrics.peak_memory_bytes == max(
            step.memory_bytes_estimate for step in metrics.steps
        )
        rebuilt = DepMetrics.aggregate(metrics.steps, metrics.backtrack_count)
        assert rebuilt == metrics


class TestSessionLog:
    def test_timestamps_must_not_decrease(self):
        log = SessionLog("s")
        log.append(interaction_event(10.0))
        with pytest.raises(ValueError):
            log.append(interaction_event(9.0))

    def test_interpretation_requires_query(self):
        log = SessionLog("s")
        with pytest.raises(ValueError):
            log.append(interaction_event(1.0, "interpretation_chosen"))
        log.append(interaction_event(1.0, "nl_query", {"question": "q"}))
        log.append(interaction_event(2.0, "interpretation_chosen", {"step_id": "s1"}))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            SessionLog("s").append(interaction_event(1.0, "telepathy"))

    def test_negative_latency_rejected(self):
        with pytest.raises(ValueError):
            SessionLog("s").append(
                Event(timestamp=1.0, kind="nl_query", payload={}, latency_ms=-1)
            )

    def test_jsonl_round_trip(self):
        log = SessionLog("s")
        log.append(interaction_event(1.0, "nl_query", {"question": "hi"}))
        log.append(interaction_event(2.0, "backtrack", {"step_id": "s1"}))
        restored = SessionLog.from_jsonl("s", log.to_jsonl())
        assert [e.to_json() for e in restored.events] == [e.to_json() for e in log.events]


class TestAccuracy:
    def test_worked_example(self):
        result = EntitySet("projects", ("p1", "p2"))
        gold = EntitySet("projects", ("p2", "p3"))
        assert accuracy(result, gold) == (0.5, 0.5, 0.5)

    def test_perfect(self):
        a = EntitySet("projects", ("p1", "p4"))
        assert accuracy(a, a) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert accuracy(
            EntitySet("projects", ("p1",)), EntitySet("projects", ("p2",))
        ) == (0.0, 0.0, 0.0)

    def test_empty_result_precision_convention(self):
        precision, recall, f1 = accuracy(
            EntitySet("projects", ()), EntitySet("projects", ("p1",))
        )
        assert (precision, recall, f1) == (1.0, 0.0, 0.0)

    def test_empty_gold_rejected(self):
        with pytest.raises(EmptyGold):
            accuracy(EntitySet("projects", ("p1",)), EntitySet("projects", ()))

    def test_table_mismatch(self):
        with pytest.raises(BaseTableMismatch):
            accuracy(EntitySet("projects", ("p1",)), EntitySet("orgs", ("o1",)))

    def test_harmonic_identity_on_random_pairs(self):
        rng = random.Random(3)
        universe = [f"r{i}" for i in range(12)]
        for _ in range(1000):
            result = EntitySet.from_ids("t", rng.sample(universe, rng.randint(0, 12)))
            gold = EntitySet.from_ids("t", rng.sample(universe, rng.randint(1, 12)))
            precision, recall, f1 = accuracy(result, gold)
            assert 0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0
            assert f1 * (precision + recall) == pytest.approx(2 * precision * recall)


class TestControllability:
    def test_four_interactions(self):
        log = SessionLog("s")
        log.append(interaction_event(1.0, "nl_query", {}))
        log.append(interaction_event(2.0, "interpretation_chosen", {}))
        log.append(interaction_event(3.0, "operator_applied", {}))
        log.append(interaction_event(4.0, "backtrack", {}))
        assert controllability(log) == 0.25

    def test_single_interaction(self):
        log = SessionLog("s")
        log.append(interaction_event(1.0, "operator_applied", {}))
        assert controllability(log) == 1.0

    def test_empty_session_absent(self):
        assert controllability(SessionLog("s")) is None

    def test_recommendation_shown_not_counted(self):
        log = SessionLog("s")
        log.append(interaction_event(1.0, "recommendation_shown", {}))
        assert controllability(log) is None

    def test_strictly_decreasing(self):
        log = SessionLog("s")
        previous = None
        for i in range(1, 8):
            log.append(interaction_event(float(i), "operator_applied", {}))
            value = controllability(log)
            if previous is not None:
                assert value < previous
            previous = value


def record_fixture_session(dataset) -> SessionLog:
    """Execute filter+facet steps and log them with digests, as the service does."""
    executor = Executor(dataset.catalog, dataset.graph)
    log = SessionLog("recorded")
    steps = [
        DepStep("s1", "scan", {"table": "projects"}, ("catalog",)),
        DepStep("s2", "by_filter", {"attribute": "country", "op": "=", "value": "FR"}, ("s1",)),
        DepStep("s3", "by_facet", {"attribute": "year"}, ("s2",)),
    ]
    for step in steps:
        output = executor.run_step(step)
        log.record(
            "operator_applied",
            {
                "step_id": step.id,
                "op": step.op,
                "params": step.params,
                "inputs": list(step.inputs),
                "result_digest": output_digest(output),
            },
        )
    return log


class TestReplay:
    def test_identical_outputs(self, dataset):
        log = record_fixture_session(dataset)
        outputs = replay(log, dataset.catalog, dataset.graph)
        assert outputs["s2"].ids == ("p1", "p2", "p6")

    def test_divergence_on_mutated_catalog(self, dataset, tmp_path):
        log = record_fixture_session(dataset)
        mutated = tmp_path / "mutated"
        mutated.mkdir()
        source_dir = fixture_path().parent
        doc = json.loads(fixture_path().read_text("utf-8"))
        for table in doc["tables"]:
            text = (source_dir / table["csv"]).read_text("utf-8")
            if table["table"] == "projects":
                text = text.replace("p6,Wind Farms,FR", "p6,Wind Farms,DE")
            (mutated / table["csv"]).write_text(text, "utf-8")
        (mutated / "dataset.json").write_text(json.dumps(doc), "utf-8")
        twisted = load_dataset(mutated / "dataset.json")
        with pytest.raises(ReplayDivergence) as caught:
            replay(log, twisted.catalog, twisted.graph)
        assert caught.value.step_id == "s2"

    def test_empty_log(self, dataset):
        assert replay(SessionLog("empty"), dataset.catalog) == {}

    def test_replays_accepted_recommendations(self, dataset):
        executor = Executor(dataset.catalog, dataset.graph)
        log = SessionLog("with-accept")
        scan = DepStep("s1", "scan", {"table": "projects"}, ("catalog",))
        executor.run_step(scan)
        log.record(
            "operator_applied",
            {"step_id": "s1", "op": "scan", "params": {"table": "projects"},
             "inputs": ["catalog"], "result_digest": output_digest(executor.outputs["s1"])},
        )
        accepted = DepStep("s2", "by_facet", {"attribute": "country"}, ("s1",))
        output = executor.run_step(accepted)
        log.record(
            "recommendation_accepted",
            {"step_id": "s2", "op": "by_facet", "params": {"attribute": "country"},
             "inputs": ["s1"], "result_digest": output_digest(output)},
        )
        outputs = replay(log, dataset.catalog, dataset.graph)
        assert [b.count for b in outputs["s2"].buckets] == [1, 2, 3]

    def test_replays_chosen_interpretations(self, dataset):
        from dataplore.query import filter_ast

        executor = Executor(dataset.catalog, dataset.graph)
        log = SessionLog("with-query")
        log.record("nl_query", {"question": "projects from France"})
        ast = filter_ast("projects", "country", "=", "FR")
        step = DepStep("s1", "query", {"ast": ast.to_json()}, ("catalog",))
        output = executor.run_step(step)
        log.record(
            "interpretation_chosen",
            {"step_id": "s1", "ast": ast.to_json(), "result_digest": output_digest(output)},
        )
        outputs = replay(log, dataset.catalog, dataset.graph)
        assert outputs["s1"].ids == ("p1", "p2", "p6")
