"""Template-based synthesis of natural-language query descriptions and
of relationship sentences between result sets.

A query is described by walking its clauses in tree order — head verb
phrase (aggregate or plain "Find"), join phrases, filter phrases joined
with "and", group phrase — filling slot templates with display names
from the schema graph. Everything is deterministic: same tree, same
byte-identical sentence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from dataplore.catalog import Catalog
from dataplore.errors import MissingTemplate
from dataplore.query import QueryAst
from dataplore.schema import SchemaGraph
from dataplore.sets import EntitySet, RccRelation, rcc_relation
from dataplore.sets import kernels

SLOT_NAMES = ("table", "attribute", "value", "fn")


@dataclass(frozen=True)
class TemplateSet:
    """Clause templates keyed by clause kind; slots: {table} {attribute} {value} {fn}."""

    templates: dict

    def render(self, kind: str, **slots) -> str:
        template = self.templates.get(kind)
        if template is None:
            raise MissingTemplate(f"no template for clause kind {kind!r}")
        return template.format(**{name: slots.get(name, "") for name in SLOT_NAMES})

    @classmethod
    def load(cls, path=None) -> "TemplateSet":
        if path is None:
            text = resources.files("dataplore.data").joinpath("templates.json").read_text("utf-8")
        else:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        return cls(templates=json.loads(text))


_DEFAULT: Optional[TemplateSet] = None


def default_templates() -> TemplateSet:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = TemplateSet.load()
    return _DEFAULT


def _table_label(graph: SchemaGraph, table: str) -> str:
    node = graph.table_nodes.get(table)
    return node.label if node else table


def _attr_label(graph: SchemaGraph, table: str, column: str) -> str:
    node = graph.attribute_nodes.get((table, column))
    return node.label if node else column


def explain_query(
    ast: QueryAst, graph: SchemaGraph, templates: Optional[TemplateSet] = None
) -> str:
    """One deterministic English sentence describing the query."""
    templates = templates or default_templates()
    source_label = _table_label(graph, ast.source)

    has_clauses = bool(ast.filters or ast.joins or ast.group_by or ast.aggregates)
    if ast.aggregates:
        head_agg = ast.aggregates[0]
        attribute = (
            _attr_label(graph, head_agg.attribute.table, head_agg.attribute.column)
            if head_agg.attribute
            else ""
        )
        head = templates.render(f"agg:{head_agg.fn}", table=source_label, attribute=attribute)
    elif not has_clauses:
        return templates.render("source_bare", table=source_label)
    else:
        head = templates.render("source", table=source_label)
    head = head.rstrip(".")

    phrases = [head]
    scope = [ast.source]
    for edge in ast.joins:
        new_table = edge.other(edge.from_table if edge.from_table in scope else edge.to_table)
        key = f"join:{edge.from_table}~{edge.to_table}"
        kind = key if key in templates.templates else "join"
        phrases.append(templates.render(kind, table=_table_label(graph, new_table)))
        scope.append(new_table)
    if ast.filters:
        rendered = [
            templates.render(
                f"filter:{comparison.op}",
                attribute=_attr_label(
                    graph, comparison.attribute.table, comparison.attribute.column
                ),
                value=str(comparison.value),
            )
            for comparison in ast.filters
        ]
        phrases.append(" and ".join(rendered))
    if ast.group_by is not None:
        phrases.append(
            templates.render(
                "group",
                attribute=_attr_label(graph, ast.group_by.table, ast.group_by.column),
            )
        )
    return " ".join(phrases) + "."


_SAME_TABLE_SENTENCES = {
    RccRelation.EQ: "The two sets are identical.",
    RccRelation.DR: "The two sets are disjoint.",
    RccRelation.PP: "The first set is contained in the second.",
    RccRelation.PPI: "The second set is contained in the first.",
}


def explain_relation(a: EntitySet, b: EntitySet, graph: SchemaGraph) -> str:
    """How two result sets relate: set words within one table, the join
    path between tables otherwise."""
    if a.base_table == b.base_table:
        relation = rcc_relation(a, b)
        if relation is RccRelation.PO:
            overlap = kernels.intersection_size(list(a.ids), list(b.ids))
            noun = "item" if overlap == 1 else "items"
            return f"The two sets overlap in {overlap} {noun}."
        return _SAME_TABLE_SENTENCES[relation]
    path = graph.shortest_table_path(a.base_table, b.base_table)
    intermediates = []
    current = a.base_table
    for edge in path:
        current = edge.other(current)
        if current != b.base_table:
            intermediates.append(_table_label(graph, current))
    if not intermediates:
        return "The two sets are directly linked."
    return "The two sets are related through " + " and ".join(intermediates) + "."
