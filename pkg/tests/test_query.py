"""SQL emission goldens, in-memory evaluation, set bridging, and
backend equivalence against SQLite."""

from __future__ import annotations

import random

import pytest

from ast_corpus import random_ast, result_bag
from dataplore.engine import SqliteEngine, engine_from_url
from dataplore.errors import (
    EmptySet,
    InvalidAst,
    MissingIdentifierProjection,
    SetTooLargeForInList,
)
from dataplore.query import (
    Aggregate,
    AttrRef,
    Comparison,
    QueryAst,
    ast_to_set,
    compile_to_sql,
    eval_in_memory,
    facet_ast,
    filter_ast,
    full_scan_ast,
    set_to_predicate,
)
from dataplore.sets import EntitySet


class TestSqlGoldens:
    def test_facet(self, catalog):
        sql = compile_to_sql(facet_ast("projects", "country"), catalog)
        assert sql == "SELECT country, COUNT(*) FROM projects GROUP BY country ORDER BY country"

    def test_filter(self, catalog):
        sql = compile_to_sql(filter_ast("projects", "country", "=", "FR"), catalog)
        assert sql.endswith("WHERE country = 'FR'")

    def test_star_expansion(self, catalog):
        sql = compile_to_sql(full_scan_ast("projects"), catalog)
        assert sql == "SELECT id, title, country, funding, year FROM projects"

    def test_join_qualifies_names(self, catalog, graph):
        ast = QueryAst(
            source="projects",
            joins=tuple(graph.join_edges),
            projection=(AttrRef("projects", "id"), AttrRef("orgs", "name")),
        )
        assert compile_to_sql(ast, catalog) == (
            "SELECT projects.id, orgs.name FROM projects "
            "INNER JOIN participation ON projects.id = participation.project_id "
            "INNER JOIN orgs ON participation.org_id = orgs.id"
        )

    def test_string_escaping(self, catalog):
        sql = compile_to_sql(filter_ast("projects", "title", "=", "O'Brien"), catalog)
        assert "WHERE title = 'O''Brien'" in sql

    def test_contains_like_escaping(self, catalog):
        plain = compile_to_sql(filter_ast("projects", "title", "contains", "Laser"), catalog)
        assert plain.endswith("WHERE title LIKE '%Laser%'")
        wild = compile_to_sql(filter_ast("projects", "title", "contains", "50%"), catalog)
        assert wild.endswith(r"WHERE title LIKE '%50\%%' ESCAPE '\'")

    def test_limit_and_order(self, catalog):
        ast = QueryAst(
            source="projects",
            order_by=((AttrRef("projects", "funding"), "desc"),),
            limit=2,
        )
        sql = compile_to_sql(ast, catalog)
        assert sql.endswith("ORDER BY funding DESC LIMIT 2")

    def test_deterministic_and_injective_on_corpus(self, catalog):
        rng = random.Random(7)
        seen: dict[str, str] = {}
        for _ in range(150):
            ast = random_ast(rng)
            sql = compile_to_sql(ast, catalog)
            assert compile_to_sql(ast, catalog) == sql  # byte-deterministic
            canonical = ast.canonical()
            if sql in seen:
                assert seen[sql] == canonical  # identical text only for identical trees
            seen[sql] = canonical


class TestValidation:
    def test_unknown_source(self, catalog):
        with pytest.raises(InvalidAst):
            compile_to_sql(full_scan_ast("nope"), catalog)

    def test_unknown_attribute(self, catalog):
        with pytest.raises(InvalidAst):
            compile_to_sql(filter_ast("projects", "budget2", "=", "x"), catalog)

    def test_type_mismatch_literal(self, catalog):
        with pytest.raises(InvalidAst):
            compile_to_sql(filter_ast("projects", "funding", "=", "abc"), catalog)
        with pytest.raises(InvalidAst):
            compile_to_sql(filter_ast("projects", "country", "=", 7), catalog)

    def test_group_projection_restriction(self, catalog):
        ast = QueryAst(
            source="projects",
            group_by=AttrRef("projects", "country"),
            aggregates=(Aggregate("count"),),
            projection=(AttrRef("projects", "title"),),
        )
        with pytest.raises(InvalidAst):
            compile_to_sql(ast, catalog)

    def test_numeric_aggregate_on_text(self, catalog):
        ast = QueryAst(
            source="projects",
            projection=(),
            aggregates=(Aggregate("sum", AttrRef("projects", "title")),),
        )
        with pytest.raises(InvalidAst):
            compile_to_sql(ast, catalog)

    def test_json_round_trip(self, catalog, graph):
        rng = random.Random(13)
        for _ in range(60):
            ast = random_ast(rng)
            assert QueryAst.from_json(ast.to_json()) == ast


class TestEvalInMemory:
    def test_facet_rows(self, catalog):
        result = eval_in_memory(facet_ast("projects", "country"), catalog)
        assert result.rows == [("CH", 1), ("DE", 2), ("FR", 3)]

    def test_filter_year(self, catalog):
        result = eval_in_memory(filter_ast("projects", "year", ">", "2019"), catalog)
        assert sorted(row[0] for row in result.rows) == ["p4", "p5", "p6"]

    def test_limit_zero(self, catalog):
        ast = QueryAst(
            source="projects",
            order_by=((AttrRef("projects", "id"), "asc"),),
            limit=0,
        )
        result = eval_in_memory(ast, catalog)
        assert result.rows == []
        assert result.headers == ["id", "title", "country", "funding", "year"]

    def test_missing_fails_every_comparison(self, tmp_path):
        from dataplore.catalog import ingest_csv

        path = tmp_path / "gaps.csv"
        path.write_text(
            "id,title,country,funding,year\np1,A,,100,2018\np2,B,DE,200,2019\n", "utf-8"
        )
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
        cat = ingest_csv(path, config)
        noteq = eval_in_memory(filter_ast("projects", "country", "!=", "DE"), cat)
        assert noteq.rows == []  # p1's missing country still fails '!='
        grouped = eval_in_memory(facet_ast("projects", "country"), cat)
        assert ("∅", 1) in grouped.rows

    def test_avg_ignores_missing(self, tmp_path):
        from dataplore.catalog import ingest_csv

        path = tmp_path / "gaps.csv"
        path.write_text(
            "id,title,country,funding,year\np1,A,FR,,2018\np2,B,FR,200,2019\n", "utf-8"
        )
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
        cat = ingest_csv(path, config)
        ast = QueryAst(
            source="projects",
            projection=(),
            aggregates=(Aggregate("avg", AttrRef("projects", "funding")),
                        Aggregate("count"),
                        Aggregate("count", AttrRef("projects", "funding"))),
        )
        result = eval_in_memory(ast, cat)
        assert result.rows == [(200.0, 2, 1)]


class TestAstToSet:
    def test_full_scan(self, catalog):
        assert ast_to_set(full_scan_ast("projects"), catalog).ids == (
            "p1", "p2", "p3", "p4", "p5", "p6",
        )

    def test_filter(self, catalog):
        assert ast_to_set(filter_ast("projects", "country", "=", "FR"), catalog).ids == (
            "p1", "p2", "p6",
        )

    def test_grouped_rejected(self, catalog):
        with pytest.raises(MissingIdentifierProjection):
            ast_to_set(facet_ast("projects", "country"), catalog)

    def test_projection_without_identifier_rejected(self, catalog):
        ast = QueryAst(source="projects", projection=(AttrRef("projects", "title"),))
        with pytest.raises(MissingIdentifierProjection):
            ast_to_set(ast, catalog)

    def test_matches_by_filter(self, catalog):
        """Two paths, one answer: query-filter vs operator-filter."""
        from dataplore.ops import by_filter, full_set

        via_query = ast_to_set(filter_ast("projects", "funding", ">=", 200), catalog)
        via_operator = by_filter(catalog, full_set(catalog, "projects"), "funding", ">=", 200)
        assert via_query.ids == via_operator.ids


class TestSetToPredicate:
    def test_in_list(self, catalog):
        assert (
            set_to_predicate(EntitySet("projects", ("p1", "p2")), catalog)
            == "id IN ('p1', 'p2')"
        )

    def test_provenance_filter_reused(self, catalog):
        entity_set = ast_to_set(filter_ast("projects", "country", "=", "FR"), catalog)
        assert set_to_predicate(entity_set, catalog) == "country = 'FR'"

    def test_cap(self, catalog):
        big = EntitySet("projects", tuple(f"x{i:05d}" for i in range(10_001)))
        with pytest.raises(SetTooLargeForInList):
            set_to_predicate(big, catalog)

    def test_empty_rejected(self, catalog):
        with pytest.raises(EmptySet):
            set_to_predicate(EntitySet("projects", ()), catalog)

    def test_predicate_selects_same_rows(self, catalog):
        engine = SqliteEngine.from_catalog(catalog)
        entity_set = ast_to_set(filter_ast("projects", "country", "=", "FR"), catalog)
        predicate = set_to_predicate(entity_set, catalog)
        rows = engine.execute(f"SELECT id FROM projects WHERE {predicate}").rows
        assert sorted(r[0] for r in rows) == list(entity_set.ids)


class TestBackendEquivalence:
    def test_random_corpus_matches_sqlite(self, catalog):
        engine = engine_from_url("sqlite://:memory:", catalog)
        rng = random.Random(42)
        for _ in range(120):
            ast = random_ast(rng)
            sql = compile_to_sql(ast, catalog)
            mine = eval_in_memory(ast, catalog)
            theirs = engine.execute(sql)
            grouped = ast.group_by is not None
            assert result_bag(mine.rows, grouped) == result_bag(theirs.rows, grouped), sql
