"""Cold-start and warm-start recommendation laws."""

from __future__ import annotations

import pytest

from dataplore.catalog import ingest_csv, profile_catalog
from dataplore.errors import EmptySession
from dataplore.guide import (
    Signature,
    TransitionModel,
    cold_start,
    train_transitions,
    warm_start,
)
from dataplore.ops import full_set
from dataplore.pipeline import SessionLog
from dataplore.query import QueryAst, eval_in_memory


def step_log(session_id: str, steps: list[tuple[str, str | None]]) -> SessionLog:
    """A session whose steps are (op, attribute) pairs."""
    log = SessionLog(session_id)
    for position, (op, attribute) in enumerate(steps):
        params = {} if attribute is None else {"attribute": attribute}
        log.record("operator_applied", {"step_id": f"s{position}", "op": op, "params": params})
    return log


TRAINING_LOGS = [
    step_log("a", [("by_filter", "country"), ("by_facet", "country")]),
    step_log("b", [("by_filter", "country"), ("by_facet", "country")]),
]


class TestColdStart:
    def test_fixture_includes_country_facet(self, catalog, profiles):
        recommendations = cold_start(catalog, profiles, k=5)
        names = [
            (rec.payload.source, rec.payload.group_by.column if rec.payload.group_by else None)
            for rec in recommendations
            if isinstance(rec.payload, QueryAst)
        ]
        assert ("projects", "country") in names

    def test_scores_sorted_and_bounded(self, catalog, profiles):
        recommendations = cold_start(catalog, profiles, k=10)
        scores = [rec.score for rec in recommendations]
        assert scores == sorted(scores, reverse=True)
        assert all(0.0 <= score <= 1.0 for score in scores)

    def test_single_table_k1(self, tmp_path):
        path = tmp_path / "only.csv"
        path.write_text("id,title,country,funding,year\np1,A,FR,1,2018\np2,B,DE,2,2019\n", "utf-8")
        config = {
            "table": "projects",
            "identifier": "id",
            "columns": [
                {"name": "id", "kind": "identifier"},
                {"name": "title", "kind": "text"},
                {"name": "country", "kind": "categorical"},
                {"name": "funding", "kind": "numeric"},
                {"name": "year", "kind": "categorical"},
            ],
        }
        catalog = ingest_csv(path, config)
        recommendations = cold_start(catalog, profile_catalog(catalog), k=1)
        assert len(recommendations) == 1
        assert recommendations[0].payload.source == "projects"

    def test_no_categoricals_yields_scans_only(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("id,n\nr1,1\nr2,2\n", "utf-8")
        config = {
            "table": "plain",
            "identifier": "id",
            "columns": [{"name": "id", "kind": "identifier"}, {"name": "n", "kind": "numeric"}],
        }
        catalog = ingest_csv(path, config)
        recommendations = cold_start(catalog, profile_catalog(catalog), k=5)
        assert [rec.payload.group_by for rec in recommendations] == [None]

    def test_replayable(self, catalog, profiles):
        first = cold_start(catalog, profiles, k=6)
        second = cold_start(catalog, profiles, k=6)
        assert [r.to_json() for r in first] == [r.to_json() for r in second]

    def test_payloads_execute(self, catalog, profiles):
        for rec in cold_start(catalog, profiles, k=8):
            result = eval_in_memory(rec.payload, catalog)
            assert result.headers


class TestTrainTransitions:
    def test_modal_transition(self):
        model = train_transitions(TRAINING_LOGS)
        probabilities = model.probabilities(Signature("by_filter", "country"))
        assert max(probabilities, key=probabilities.get) == "by_facet:country"

    def test_empty_logs_uniform(self):
        model = train_transitions([])
        assert model.probabilities(Signature("by_filter", "country")) == {}

    def test_unseen_source_is_uniform(self):
        model = train_transitions(TRAINING_LOGS)
        probabilities = model.probabilities(Signature("by_join"))
        values = set(probabilities.values())
        assert len(values) == 1
        assert sum(probabilities.values()) == pytest.approx(1.0)

    def test_single_step_sessions_contribute_no_transitions(self):
        model = train_transitions([step_log("solo", [("by_facet", "country")])])
        assert model.counts == {}
        assert "by_facet:country" in model.signatures

    def test_probabilities_sum_to_one(self):
        model = train_transitions(TRAINING_LOGS)
        for source in ("by_filter:country", "by_facet:country"):
            total = sum(model.probabilities(Signature.parse(source)).values())
            assert total == pytest.approx(1.0)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            train_transitions([], alpha=0)

    def test_json_round_trip(self, tmp_path):
        model = train_transitions(TRAINING_LOGS)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = TransitionModel.load(path)
        assert loaded.to_json() == model.to_json()


class TestWarmStart:
    def current(self, catalog):
        return full_set(catalog, "projects")

    def session(self):
        return step_log("live", [("by_filter", "country")])

    def test_modal_transition_ranks_first(self, catalog, graph):
        model = train_transitions(TRAINING_LOGS)
        recommendations = warm_start(
            model, self.session(), self.current(catalog), k=5, novelty_weight=0.0,
            catalog=catalog, graph=graph,
        )
        assert recommendations[0].payload["op"] == "by_facet"
        assert recommendations[0].payload["params"]["attribute"] == "country"

    def test_full_novelty_puts_unseen_first(self, catalog, graph):
        model = train_transitions(TRAINING_LOGS)
        model.observe(Signature("by_filter", "country"), Signature("by_overlap"))
        recommendations = warm_start(
            model, self.session(), self.current(catalog), k=10, novelty_weight=1.0,
            catalog=catalog, graph=graph,
        )
        seen = {"by_filter:country"}
        names = [
            f"{r.payload['op']}:{r.payload['params']['attribute']}"
            if "attribute" in r.payload["params"]
            else r.payload["op"]
            for r in recommendations
        ]
        boundary = [name in seen for name in names]
        assert boundary == sorted(boundary)  # every unseen signature before any seen one

    def test_k_zero(self, catalog, graph):
        model = train_transitions(TRAINING_LOGS)
        assert warm_start(model, self.session(), self.current(catalog), 0, 0.2,
                          catalog, graph) == []

    def test_empty_session_rejected(self, catalog, graph):
        model = train_transitions(TRAINING_LOGS)
        with pytest.raises(EmptySession):
            warm_start(model, SessionLog("fresh"), self.current(catalog), 3, 0.2,
                       catalog, graph)

    def test_argmax_invariant_under_count_scaling(self, catalog, graph):
        model = train_transitions(TRAINING_LOGS)
        model.observe(Signature("by_filter", "country"), Signature("by_example", "funding"), 3)
        for novelty_weight in (0.0, 0.3, 1.0):
            baseline = warm_start(
                model, self.session(), self.current(catalog), 10, novelty_weight,
                catalog, graph,
            )
            for factor in (0.001, 0.5, 7, 5000):
                scaled = warm_start(
                    model.scaled(factor), self.session(), self.current(catalog), 10,
                    novelty_weight, catalog, graph,
                )
                assert [r.payload for r in scaled] == [r.payload for r in baseline]

    def test_payloads_execute_against_catalog(self, catalog, graph):
        from dataplore.pipeline import DepStep, Executor

        model = train_transitions(TRAINING_LOGS)
        model.observe(Signature("by_filter", "country"), Signature("by_join"))
        model.observe(Signature("by_filter", "country"), Signature("by_example", "funding"))
        recommendations = warm_start(
            model, self.session(), self.current(catalog), 10, 0.5, catalog, graph
        )
        assert recommendations
        executor = Executor(catalog, graph)
        executor.run_step(DepStep("s1", "scan", {"table": "projects"}, ("catalog",)))
        for position, rec in enumerate(recommendations):
            step = DepStep(
                f"r{position}", rec.payload["op"], rec.payload["params"], ("s1",)
            )
            executor.run_step(step)  # must not raise
