"""Query AST shared by NL interpretation and the operators, with two
backends: a deterministic ANSI-SQL92 text emitter for relational engines
and an in-memory bag-semantics evaluator that serves as the reference.

Missing-value semantics are fixed everywhere: comparisons on missing
cells are false (even "!="), group-by treats missing as the dedicated
key "∅", and aggregates skip missing cells (count(*) counts rows).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

from dataplore.catalog import Catalog, Table
from dataplore.errors import (
    EmptySet,
    InvalidAst,
    MissingIdentifierProjection,
    SetTooLargeForInList,
)
from dataplore.schema import JoinEdge
from dataplore.sets import EntitySet

MISSING_KEY = "∅"

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=", "contains")
_OP_ALIASES = {"≠": "!=", "<>": "!=", "≤": "<=", "≥": ">=", "==": "="}
AGGREGATE_FNS = ("count", "sum", "avg", "min", "max")

DEFAULT_IN_LIST_LIMIT = 10_000


def normalize_op(op: str) -> str:
    op = _OP_ALIASES.get(op, op)
    if op not in COMPARISON_OPS:
        raise InvalidAst(f"unknown comparison operator {op!r}")
    return op


@dataclass(frozen=True)
class AttrRef:
    table: str
    column: str

    def to_json(self) -> str:
        return f"{self.table}.{self.column}"

    @classmethod
    def from_json(cls, ref: str) -> "AttrRef":
        table, _, column = ref.partition(".")
        if not table or not column:
            raise InvalidAst(f"attribute references look like 'table.column', got {ref!r}")
        return cls(table, column)


@dataclass(frozen=True)
class Comparison:
    attribute: AttrRef
    op: str
    value: Union[str, int, float]

    def __post_init__(self):
        object.__setattr__(self, "op", normalize_op(self.op))

    def to_json(self) -> dict:
        return {"attribute": self.attribute.to_json(), "op": self.op, "value": self.value}

    @classmethod
    def from_json(cls, doc: dict) -> "Comparison":
        return cls(AttrRef.from_json(doc["attribute"]), doc["op"], doc["value"])


@dataclass(frozen=True)
class Aggregate:
    fn: str
    attribute: Optional[AttrRef] = None  # None means *

    def __post_init__(self):
        if self.fn not in AGGREGATE_FNS:
            raise InvalidAst(f"unknown aggregate function {self.fn!r}")

    def to_json(self) -> dict:
        return {"fn": self.fn, "attribute": self.attribute.to_json() if self.attribute else "*"}

    @classmethod
    def from_json(cls, doc: dict) -> "Aggregate":
        attr = doc.get("attribute", "*")
        return cls(doc["fn"], None if attr in (None, "*") else AttrRef.from_json(attr))


@dataclass(frozen=True)
class QueryAst:
    """Select/filter/join/group-aggregate tree over one source table."""

    source: str
    joins: tuple[JoinEdge, ...] = ()
    filters: tuple[Comparison, ...] = ()
    group_by: Optional[AttrRef] = None
    aggregates: tuple[Aggregate, ...] = ()
    projection: Union[str, tuple[AttrRef, ...]] = "*"
    order_by: tuple[tuple[AttrRef, str], ...] = ()
    limit: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "joins": [e.to_json() for e in self.joins],
            "filters": [f.to_json() for f in self.filters],
            "group_by": self.group_by.to_json() if self.group_by else None,
            "aggregates": [a.to_json() for a in self.aggregates],
            "projection": "*" if self.projection == "*" else [a.to_json() for a in self.projection],
            "order_by": [[attr.to_json(), direction] for attr, direction in self.order_by],
            "limit": self.limit,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QueryAst":
        projection = doc.get("projection", "*")
        return cls(
            source=doc["source"],
            joins=tuple(JoinEdge.from_json(e) for e in doc.get("joins", [])),
            filters=tuple(Comparison.from_json(f) for f in doc.get("filters", [])),
            group_by=AttrRef.from_json(doc["group_by"]) if doc.get("group_by") else None,
            aggregates=tuple(Aggregate.from_json(a) for a in doc.get("aggregates", [])),
            projection="*" if projection == "*" else tuple(AttrRef.from_json(a) for a in projection),
            order_by=tuple(
                (AttrRef.from_json(attr), direction) for attr, direction in doc.get("order_by", [])
            ),
            limit=doc.get("limit"),
        )

    def canonical(self) -> str:
        """Byte-stable serialization used for deduplication and tie-breaks."""
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


@dataclass
class ResultTable:
    headers: list[str]
    rows: list[tuple]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.headers):
                raise InvalidAst(
                    f"row arity {len(row)} does not match header arity {len(self.headers)}"
                )

    def to_json(self) -> dict:
        return {"headers": list(self.headers), "rows": [list(r) for r in self.rows]}


def full_scan_ast(table: str) -> QueryAst:
    return QueryAst(source=table)


def filter_ast(table: str, column: str, op: str, value) -> QueryAst:
    return QueryAst(source=table, filters=(Comparison(AttrRef(table, column), op, value),))


def facet_ast(table: str, column: str) -> QueryAst:
    attr = AttrRef(table, column)
    return QueryAst(
        source=table,
        projection=(attr,),
        group_by=attr,
        aggregates=(Aggregate("count"),),
        order_by=((attr, "asc"),),
    )


# -- validation ----------------------------------------------------------------


def _scope_tables(ast: QueryAst, catalog: Catalog) -> list[str]:
    """Tables visible to the query, in join order; validates the join chain."""
    if ast.source not in catalog.tables:
        raise InvalidAst(f"unknown source table {ast.source!r}")
    scope = [ast.source]
    for edge in ast.joins:
        for table, column in (
            (edge.from_table, edge.from_column),
            (edge.to_table, edge.to_column),
        ):
            if table not in catalog.tables or not catalog.table(table).has_column(column):
                raise InvalidAst(f"join edge references unknown column {table}.{column}")
        known = [t for t in (edge.from_table, edge.to_table) if t in scope]
        if len(known) != 1:
            raise InvalidAst(
                f"join edge {edge.from_table}->{edge.to_table} must attach exactly one new table"
            )
        scope.append(edge.other(known[0]))
    return scope


def _resolve(attr: AttrRef, scope: list[str], catalog: Catalog) -> str:
    """Column kind of an in-scope attribute."""
    if attr.table not in scope:
        raise InvalidAst(f"attribute {attr.to_json()} is not in the query scope")
    table = catalog.table(attr.table)
    if not table.has_column(attr.column):
        raise InvalidAst(f"unknown attribute {attr.to_json()}")
    return table.column(attr.column).kind


def _check_literal(kind: str, comparison: Comparison) -> None:
    value = comparison.value
    if comparison.op == "contains":
        if kind == "numeric" or not isinstance(value, str):
            raise InvalidAst("'contains' applies to string columns and string literals only")
        return
    if kind == "numeric":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidAst(
                f"numeric column {comparison.attribute.to_json()} needs a numeric literal, "
                f"got {value!r}"
            )
    elif not isinstance(value, str):
        raise InvalidAst(
            f"column {comparison.attribute.to_json()} needs a string literal, got {value!r}"
        )


def validate_ast(ast: QueryAst, catalog: Catalog) -> None:
    """Raise InvalidAst unless the tree is well-formed against the catalog."""
    scope = _scope_tables(ast, catalog)
    for comparison in ast.filters:
        kind = _resolve(comparison.attribute, scope, catalog)
        _check_literal(kind, comparison)
    for aggregate in ast.aggregates:
        if aggregate.attribute is None:
            if aggregate.fn != "count":
                raise InvalidAst(f"{aggregate.fn}(*) is not a thing; only count(*)")
            continue
        kind = _resolve(aggregate.attribute, scope, catalog)
        if aggregate.fn != "count" and kind != "numeric":
            raise InvalidAst(f"{aggregate.fn} needs a numeric attribute")
    if ast.group_by is not None:
        _resolve(ast.group_by, scope, catalog)
        if ast.projection == "*":
            raise InvalidAst("grouped queries must project the group key explicitly")
        for attr in ast.projection:
            if attr != ast.group_by:
                raise InvalidAst(
                    f"projection {attr.to_json()} is neither the group key nor an aggregate"
                )
    elif ast.projection != "*":
        for attr in ast.projection:
            _resolve(attr, scope, catalog)
    if ast.projection != "*" and not ast.projection and not ast.aggregates:
        raise InvalidAst("nothing to select")
    for attr, direction in ast.order_by:
        _resolve(attr, scope, catalog)
        if direction not in ("asc", "desc"):
            raise InvalidAst(f"order direction must be 'asc' or 'desc', got {direction!r}")
        if ast.group_by is not None and attr != ast.group_by:
            raise InvalidAst("grouped queries may only order by the group key")
    if ast.limit is not None and ast.limit < 0:
        raise InvalidAst("limit must be >= 0")


# -- SQL emission ----------------------------------------------------------------


def _sql_string(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def _sql_literal(value) -> str:
    if isinstance(value, str):
        return _sql_string(value)
    return str(value)


def _select_items(ast: QueryAst, catalog: Catalog, qualify: bool) -> list[str]:
    def name(attr: AttrRef) -> str:
        return attr.to_json() if qualify else attr.column

    items: list[str] = []
    if ast.projection == "*":
        scope = _scope_tables(ast, catalog)
        for table in scope:
            for column in catalog.table(table).column_names():
                items.append(name(AttrRef(table, column)))
    else:
        items.extend(name(attr) for attr in ast.projection)
    for aggregate in ast.aggregates:
        if aggregate.attribute is None:
            items.append("COUNT(*)")
        else:
            items.append(f"{aggregate.fn.upper()}({name(aggregate.attribute)})")
    return items


def _sql_comparison(comparison: Comparison, name: str) -> str:
    if comparison.op == "contains":
        value = str(comparison.value)
        needs_escape = any(ch in value for ch in "\\%_")
        if needs_escape:
            for ch in ("\\", "%", "_"):
                value = value.replace(ch, "\\" + ch)
        clause = f"{name} LIKE {_sql_string('%' + value + '%')}"
        return clause + " ESCAPE '\\'" if needs_escape else clause
    op = "<>" if comparison.op == "!=" else comparison.op
    return f"{name} {op} {_sql_literal(comparison.value)}"


def compile_to_sql(ast: QueryAst, catalog: Catalog) -> str:
    """Deterministic SQL text: uppercase keywords, explicit column lists,
    single-quoted strings with doubled-quote escaping, stable clause order.

    Column names are qualified exactly when the query joins tables. LIMIT
    is emitted last when the tree carries one (a pragmatic extension over
    the SQL92 core; every target engine accepts it).
    """
    validate_ast(ast, catalog)
    qualify = bool(ast.joins)

    def name(attr: AttrRef) -> str:
        return attr.to_json() if qualify else attr.column

    parts = ["SELECT " + ", ".join(_select_items(ast, catalog, qualify))]
    parts.append("FROM " + ast.source)
    scope = [ast.source]
    for edge in ast.joins:
        new_table = edge.other(edge.from_table if edge.from_table in scope else edge.to_table)
        parts.append(
            f"INNER JOIN {new_table} ON "
            f"{edge.from_table}.{edge.from_column} = {edge.to_table}.{edge.to_column}"
        )
        scope.append(new_table)
    if ast.filters:
        parts.append(
            "WHERE " + " AND ".join(_sql_comparison(c, name(c.attribute)) for c in ast.filters)
        )
    if ast.group_by is not None:
        parts.append("GROUP BY " + name(ast.group_by))
    if ast.order_by:
        rendered = [
            name(attr) + ("" if direction == "asc" else " DESC")
            for attr, direction in ast.order_by
        ]
        parts.append("ORDER BY " + ", ".join(rendered))
    if ast.limit is not None:
        parts.append(f"LIMIT {ast.limit}")
    return " ".join(parts)


# -- in-memory evaluation ----------------------------------------------------------


def compare_values(value, op: str, literal) -> bool:
    """Three-valued-lite comparison: missing never satisfies anything."""
    if value is None:
        return False
    if op == "=":
        return value == literal
    if op == "!=":
        return value != literal
    if op == "contains":
        return str(literal) in str(value)
    if op == "<":
        return value < literal
    if op == "<=":
        return value <= literal
    if op == ">":
        return value > literal
    if op == ">=":
        return value >= literal
    raise InvalidAst(f"unknown comparison operator {op!r}")


def _materialize_rows(ast: QueryAst, catalog: Catalog) -> list[dict]:
    """Working rows as {(table, column): value} dicts after joins and filters."""
    source: Table = catalog.table(ast.source)
    rows = [
        {(ast.source, col): row[i] for i, col in enumerate(source.column_names())}
        for row in source.rows
    ]
    scope = [ast.source]
    for edge in ast.joins:
        if edge.from_table in scope:
            old_table, old_col = edge.from_table, edge.from_column
            new_table, new_col = edge.to_table, edge.to_column
        else:
            old_table, old_col = edge.to_table, edge.to_column
            new_table, new_col = edge.from_table, edge.from_column
        index = catalog.join_index(new_table, new_col)
        target = catalog.table(new_table)
        target_cols = target.column_names()
        joined = []
        for row in rows:
            key = row[(old_table, old_col)]
            if key is None:
                continue
            for matched_id in index.get(key, ()):
                matched = target.row(matched_id)
                merged = dict(row)
                merged.update({(new_table, col): matched[i] for i, col in enumerate(target_cols)})
                joined.append(merged)
        rows = joined
        scope.append(new_table)

    if ast.filters:
        rows = [
            row
            for row in rows
            if all(
                compare_values(row[(c.attribute.table, c.attribute.column)], c.op, c.value)
                for c in ast.filters
            )
        ]
    return rows


def _aggregate_value(aggregate: Aggregate, rows: list[dict]):
    if aggregate.attribute is None:
        return len(rows)
    key = (aggregate.attribute.table, aggregate.attribute.column)
    values = [row[key] for row in rows if row[key] is not None]
    if aggregate.fn == "count":
        return len(values)
    if not values:
        return None
    if aggregate.fn == "sum":
        return sum(values)
    if aggregate.fn == "avg":
        return sum(values) / len(values)
    if aggregate.fn == "min":
        return min(values)
    return max(values)


def _sort_key_for(position: int):
    def key(row: tuple):
        value = row[position]
        return (1, "") if value is None else (0, value)

    return key


def eval_in_memory(ast: QueryAst, catalog: Catalog) -> ResultTable:
    """Evaluate the tree against the catalog with bag semantics."""
    validate_ast(ast, catalog)
    qualify = bool(ast.joins)
    headers = _select_items(ast, catalog, qualify)
    working = _materialize_rows(ast, catalog)

    if ast.group_by is not None:
        group_key = (ast.group_by.table, ast.group_by.column)
        groups: dict = {}
        order: list = []
        for row in working:
            key = row[group_key]
            key = MISSING_KEY if key is None else key
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row)
        out_rows = []
        for key in order:
            members = groups[key]
            cells = [key for _ in ast.projection]
            cells.extend(_aggregate_value(agg, members) for agg in ast.aggregates)
            out_rows.append(tuple(cells))
        # order_by may only reference the group key (validated above)
        for attr, direction in reversed(ast.order_by):
            out_rows.sort(key=_sort_key_for(0), reverse=direction == "desc")
    elif ast.aggregates:
        cells = []
        if ast.projection != "*":
            cells.extend(None for _ in ast.projection)
        cells.extend(_aggregate_value(agg, working) for agg in ast.aggregates)
        out_rows = [tuple(cells)]
    else:
        if ast.projection == "*":
            scope = _scope_tables(ast, catalog)
            columns = [
                (table, column)
                for table in scope
                for column in catalog.table(table).column_names()
            ]
        else:
            columns = [(attr.table, attr.column) for attr in ast.projection]
        out_rows = [tuple(row[col] for col in columns) for row in working]
        if ast.order_by:
            positions = {col: i for i, col in enumerate(columns)}
            for attr, direction in reversed(ast.order_by):
                position = positions.get((attr.table, attr.column))
                if position is None:
                    raise InvalidAst(
                        f"order_by attribute {attr.to_json()} must be projected"
                    )
                out_rows.sort(key=_sort_key_for(position), reverse=direction == "desc")

    if ast.limit is not None:
        out_rows = out_rows[: ast.limit]
    return ResultTable(headers=headers, rows=out_rows)


def ast_to_set(ast: QueryAst, catalog: Catalog) -> EntitySet:
    """Materialize the matching source-table ids as an EntitySet.

    The query must be ungrouped and must project the source identifier
    (projecting * qualifies). The produced set carries the tree as its
    provenance so the SQL backend can later push the filter down instead
    of an IN list.
    """
    if ast.group_by is not None:
        raise MissingIdentifierProjection("grouped queries do not materialize an entity set")
    identifier = catalog.table(ast.source).identifier
    id_attr = AttrRef(ast.source, identifier)
    if ast.projection != "*" and id_attr not in ast.projection:
        raise MissingIdentifierProjection(
            f"projection must include {id_attr.to_json()} to materialize a set"
        )
    probe = QueryAst(
        source=ast.source,
        joins=ast.joins,
        filters=ast.filters,
        projection=(id_attr,),
    )
    result = eval_in_memory(probe, catalog)
    return EntitySet.from_ids(ast.source, (row[0] for row in result.rows), provenance=ast)


def set_to_predicate(
    entity_set: EntitySet, catalog: Catalog, in_list_limit: int = DEFAULT_IN_LIST_LIMIT
) -> str:
    """SQL filter fragment selecting exactly this set's rows.

    Reuses the provenance query's filter when one is attached and
    self-contained (non-empty, no joins); otherwise falls back to an
    ascending IN list, capped at ``in_list_limit`` ids.
    """
    if not entity_set.ids:
        raise EmptySet("cannot build a predicate for an empty set")
    provenance = entity_set.provenance
    if (
        isinstance(provenance, QueryAst)
        and provenance.source == entity_set.base_table
        and provenance.filters
        and not provenance.joins
    ):
        return " AND ".join(
            _sql_comparison(c, c.attribute.column) for c in provenance.filters
        )
    if len(entity_set.ids) > in_list_limit:
        raise SetTooLargeForInList(
            f"set has {len(entity_set.ids)} ids, IN-list cap is {in_list_limit}"
        )
    identifier = catalog.table(entity_set.base_table).identifier
    rendered = ", ".join(_sql_literal(i) for i in entity_set.ids)
    return f"{identifier} IN ({rendered})"
