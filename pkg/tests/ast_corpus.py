"""Seeded random query-tree generator over the fixture, used by the
backend-equivalence tests: whatever the in-memory evaluator returns must
match, as a bag, what a real SQL engine returns for the emitted text."""

from __future__ import annotations

import random
from collections import Counter

from dataplore.query import (
    MISSING_KEY,
    Aggregate,
    AttrRef,
    Comparison,
    QueryAst,
)
from dataplore.schema import JoinEdge

_EDGE_PROJECTS = JoinEdge("projects", "id", "participation", "project_id")
_EDGE_ORGS = JoinEdge("participation", "org_id", "orgs", "id")

# source table -> possible join chains
_JOIN_CHAINS = {
    "projects": [(), (_EDGE_PROJECTS,), (_EDGE_PROJECTS, _EDGE_ORGS)],
    "participation": [(), (_EDGE_PROJECTS,), (_EDGE_ORGS,), (_EDGE_PROJECTS, _EDGE_ORGS)],
    "orgs": [(), (_EDGE_ORGS,), (_EDGE_ORGS, _EDGE_PROJECTS)],
}

_COLUMNS = {
    "projects": {
        "id": "identifier",
        "title": "text",
        "country": "categorical",
        "funding": "numeric",
        "year": "categorical",
    },
    "orgs": {"id": "identifier", "name": "text", "country": "categorical"},
    "participation": {"id": "identifier", "project_id": "text", "org_id": "text"},
}

_STRING_LITERALS = {
    ("projects", "country"): ["FR", "DE", "CH", "GR"],
    ("projects", "year"): ["2018", "2019", "2020", "2021"],
    ("projects", "title"): ["Quantum Lasers", "Robots", "o", "zz"],
    ("projects", "id"): ["p1", "p3", "p9"],
    ("orgs", "country"): ["FR", "CH", "DE"],
    ("orgs", "name"): ["Zurich Data Lab", "Lab", "a"],
    ("orgs", "id"): ["o1", "o2"],
    ("participation", "id"): ["t1", "t8"],
    ("participation", "project_id"): ["p1", "p4", "p9"],
    ("participation", "org_id"): ["o2", "o3"],
}

_NUMERIC_LITERALS = [0, 100, 120, 150.5, 186, 200, 250, 300, 999]


def _scope(source: str, joins) -> list[str]:
    tables = [source]
    for edge in joins:
        tables.append(edge.to_table if edge.to_table not in tables else edge.from_table)
    return tables


def random_ast(rng: random.Random) -> QueryAst:
    source = rng.choice(sorted(_JOIN_CHAINS))
    joins = tuple(rng.choice(_JOIN_CHAINS[source]))
    scope = _scope(source, joins)
    attrs = [AttrRef(t, c) for t in scope for c in _COLUMNS[t]]

    filters = []
    for _ in range(rng.randint(0, 2)):
        attr = rng.choice(attrs)
        kind = _COLUMNS[attr.table][attr.column]
        if kind == "numeric":
            op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
            literal = rng.choice(_NUMERIC_LITERALS)
        else:
            op = rng.choice(["=", "!=", "<", "<=", ">", ">=", "contains"])
            literal = rng.choice(_STRING_LITERALS[(attr.table, attr.column)])
        filters.append(Comparison(attr, op, literal))

    numeric_attrs = [a for a in attrs if _COLUMNS[a.table][a.column] == "numeric"]

    if rng.random() < 0.4:  # grouped query
        group = rng.choice(attrs)
        aggregates = [Aggregate("count")]
        if numeric_attrs and rng.random() < 0.5:
            aggregates.append(Aggregate(rng.choice(["sum", "avg", "min", "max"]),
                                        rng.choice(numeric_attrs)))
        return QueryAst(
            source=source,
            joins=joins,
            filters=tuple(filters),
            group_by=group,
            aggregates=tuple(aggregates),
            projection=(group,),
            order_by=((group, "asc"),),
        )

    if numeric_attrs and rng.random() < 0.2:  # global aggregate
        fns = rng.sample(["count", "sum", "avg", "min", "max"], k=rng.randint(1, 3))
        aggregates = tuple(
            Aggregate(fn) if fn == "count" else Aggregate(fn, rng.choice(numeric_attrs))
            for fn in fns
        )
        return QueryAst(source=source, joins=joins, filters=tuple(filters),
                        projection=(), aggregates=aggregates)

    projection: object = "*"
    if rng.random() < 0.5:
        chosen = rng.sample(attrs, k=rng.randint(1, min(3, len(attrs))))
        projection = tuple(chosen)

    order_by = ()
    limit = None
    if not joins and rng.random() < 0.4:
        id_attr = AttrRef(source, "id")
        if projection == "*" or id_attr in projection:
            order_by = ((id_attr, rng.choice(["asc", "desc"])),)
            if rng.random() < 0.5:
                limit = rng.randint(0, 5)
    return QueryAst(
        source=source,
        joins=joins,
        filters=tuple(filters),
        projection=projection,
        order_by=order_by,
        limit=limit,
    )


def _normalize_cell(value):
    if isinstance(value, float):
        return round(value, 9)
    return value


def result_bag(rows, grouped: bool) -> Counter:
    """Bag of rows; SQL NULL group keys map to the in-memory missing key."""
    bag: Counter = Counter()
    for row in rows:
        cells = tuple(_normalize_cell(c) for c in row)
        if grouped and cells and cells[0] is None:
            cells = (MISSING_KEY,) + cells[1:]
        bag[cells] += 1
    return bag
