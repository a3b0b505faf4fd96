"""Tokenization, stemming, term matching, and question interpretation."""

from __future__ import annotations

from pathlib import Path

import pytest

from dataplore.errors import InvalidAst, NoInterpretation
from dataplore.nl import interpret, match_terms, normalize
from dataplore.nl_text import stem
from dataplore.query import AttrRef, Comparison, compile_to_sql

QUESTIONS = [
    line
    for line in (Path(__file__).parent / "data" / "questions.txt").read_text("utf-8").splitlines()
    if line.strip()
]


class TestNormalize:
    def test_stems_fig_question(self):
        stream = normalize("Find all projects")
        assert [t.stem for t in stream] == ["find", "all", "project"]
        assert [t.is_stopword for t in stream] == [True, True, False]

    def test_ies_rule(self):
        assert stem("countries") == "country"

    def test_empty_input(self):
        assert len(normalize("")) == 0

    @pytest.mark.parametrize(
        "word,expected",
        [
            ("projects", "project"),       # s-rule
            ("funding", "fund"),           # ing-rule
            ("grouped", "group"),          # ed-rule
            ("organizations", "organization"),
            ("all", "all"),                # no rule below length 3
            ("es", "es"),                  # too short to strip
            ("france", "france"),          # no matching suffix
        ],
    )
    def test_stemmer_rules(self, word, expected):
        assert stem(word) == expected

    def test_first_matching_rule_only(self):
        # 'ies' fires before 's' ever gets a chance
        assert stem("stories") == "story"

    def test_stopwords_flagged_but_retained(self):
        stream = normalize("show me the projects")
        assert len(stream) == 4
        assert [t.stem for t in stream.content_tokens()] == ["project"]


class TestMatchTerms:
    def test_table_match(self, dataset):
        matched = match_terms(normalize("project"), dataset.graph)
        assert len(matched) == 1
        _, _, candidates = matched[0]
        assert [c.node_key for c in candidates] == ["projects"]

    def test_value_match_via_synonym(self, dataset):
        matched = match_terms(normalize("france"), dataset.graph)
        (_, _, candidates) = matched[0]
        assert [(c.kind, c.node_key) for c in candidates] == [
            ("value", "projects.country=FR")
        ]

    def test_ambiguous_attribute(self, dataset):
        matched = match_terms(normalize("country"), dataset.graph)
        (_, _, candidates) = matched[0]
        assert {c.node_key for c in candidates} == {"projects.country", "orgs.country"}

    def test_unknown_token_is_unmatched(self, dataset):
        assert match_terms(normalize("zzz"), dataset.graph) == []


class TestInterpret:
    def test_find_all_projects(self, dataset):
        interpretations = interpret("Find all projects", dataset.graph, dataset.catalog, n=3)
        top = interpretations[0]
        assert compile_to_sql(top.ast, dataset.catalog) == (
            "SELECT id, title, country, funding, year FROM projects"
        )
        assert top.score == 1.0

    def test_filter_from_france(self, dataset):
        top = interpret("show projects from France", dataset.graph, dataset.catalog)[0]
        assert top.ast.filters == (
            Comparison(AttrRef("projects", "country"), "=", "FR"),
        )

    def test_group_and_aggregate(self, dataset):
        top = interpret("average funding by country", dataset.graph, dataset.catalog)[0]
        assert top.ast.group_by == AttrRef("projects", "country")
        assert [(a.fn, a.attribute) for a in top.ast.aggregates] == [
            ("avg", AttrRef("projects", "funding"))
        ]

    def test_ambiguity_yields_multiple_interpretations(self, dataset):
        interpretations = interpret("count projects by country", dataset.graph, dataset.catalog, n=5)
        assert len(interpretations) >= 2
        assert interpretations[0].score > interpretations[1].score
        # the cheaper join tree ranks first
        assert len(interpretations[0].ast.joins) < len(interpretations[1].ast.joins)

    def test_nothing_matches(self, dataset):
        with pytest.raises(NoInterpretation):
            interpret("purple elephant tango", dataset.graph, dataset.catalog)

    def test_unmatched_tokens_reported(self, dataset):
        top = interpret("find quantum projects", dataset.graph, dataset.catalog)[0]
        assert top.unmatched == ("quantum",)
        assert top.score < 1.0

    def test_score_monotonicity(self, dataset):
        """An extra unmatched token never raises any interpretation's score."""
        base = interpret("show projects", dataset.graph, dataset.catalog, n=5)
        noisy = interpret("show zzz projects", dataset.graph, dataset.catalog, n=5)
        best_base = {i.ast.canonical(): i.score for i in base}
        for interpretation in noisy:
            key = interpretation.ast.canonical()
            if key in best_base:
                assert interpretation.score <= best_base[key]

    def test_n_clamps_output(self, dataset):
        assert len(interpret("count projects by country", dataset.graph, dataset.catalog, n=1)) == 1
        with pytest.raises(ValueError):
            interpret("projects", dataset.graph, dataset.catalog, n=0)

    def test_determinism_over_corpus(self, dataset):
        for question in QUESTIONS:
            first = interpret(question, dataset.graph, dataset.catalog, n=4)
            second = interpret(question, dataset.graph, dataset.catalog, n=4)
            assert [i.ast.canonical() for i in first] == [i.ast.canonical() for i in second]
            assert [i.score for i in first] == [i.score for i in second]

    def test_soundness_over_corpus(self, dataset):
        """Every returned tree must compile; bindings must be exact stems."""
        vocabulary_stems = set(dataset.graph.vocabulary) | set(dataset.graph.value_dictionary)
        for question in QUESTIONS:
            for interpretation in interpret(question, dataset.graph, dataset.catalog, n=4):
                try:
                    compile_to_sql(interpretation.ast, dataset.catalog)
                except InvalidAst as error:  # pragma: no cover - failure reporting
                    pytest.fail(f"{question!r} produced an invalid tree: {error}")
                assert interpretation.bindings
                for binding in interpretation.bindings:
                    assert binding.token.stem in vocabulary_stems
