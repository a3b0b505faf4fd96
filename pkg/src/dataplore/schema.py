"""Schema graph: table/attribute nodes, join edges, and the term vocabulary.

The vocabulary is the matching surface for NL interpretation: every node
auto-registers its own name, configs add synonyms, and categorical
columns contribute a value dictionary (cell value -> literal binding).
One term may resolve to several nodes; that ambiguity is what produces
multiple query interpretations downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from dataplore.catalog import Catalog
from dataplore.errors import (
    DuplicateSynonym,
    NoPathBetweenTables,
    UnknownColumnInSynonym,
    UnknownJoinKey,
)
from dataplore.nl_text import normalize_term


@dataclass
class TableNode:
    table: str
    label: str
    terms: list[str] = field(default_factory=list)

    @property
    def key(self) -> str:
        return self.table


@dataclass
class AttributeNode:
    table: str
    column: str
    kind: str
    label: str
    terms: list[str] = field(default_factory=list)

    @property
    def key(self) -> str:
        return f"{self.table}.{self.column}"


Node = Union[TableNode, AttributeNode]


@dataclass(frozen=True)
class JoinEdge:
    from_table: str
    from_column: str
    to_table: str
    to_column: str

    def touches(self, table: str) -> bool:
        return table in (self.from_table, self.to_table)

    def other(self, table: str) -> str:
        return self.to_table if table == self.from_table else self.from_table

    def to_json(self) -> dict:
        return {
            "from_table": self.from_table,
            "from_column": self.from_column,
            "to_table": self.to_table,
            "to_column": self.to_column,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "JoinEdge":
        return cls(doc["from_table"], doc["from_column"], doc["to_table"], doc["to_column"])


@dataclass(frozen=True)
class ValueBindingTarget:
    """A vocabulary hit on a concrete cell value: column = value."""

    table: str
    column: str
    value: str


class SchemaGraph:
    """Immutable after build_schema_graph; shareable across readers."""

    def __init__(self):
        self.table_nodes: dict[str, TableNode] = {}
        self.attribute_nodes: dict[tuple[str, str], AttributeNode] = {}
        self.join_edges: list[JoinEdge] = []
        self.vocabulary: dict[str, list[Node]] = {}
        self.value_dictionary: dict[str, list[ValueBindingTarget]] = {}
        self._adjacency: dict[str, list[JoinEdge]] = {}

    # -- construction helpers -------------------------------------------------

    def _register_term(self, term: str, node: Node, *, declared: bool = False) -> None:
        stem = normalize_term(term)
        if not stem:
            return
        nodes = self.vocabulary.setdefault(stem, [])
        if any(existing is node for existing in nodes):
            if declared:
                raise DuplicateSynonym(f"term {term!r} already registered for {node.key}")
            return
        nodes.append(node)
        node.terms.append(stem)

    def _register_value(self, term: str, target: ValueBindingTarget) -> None:
        stem = normalize_term(term)
        if not stem:
            return
        targets = self.value_dictionary.setdefault(stem, [])
        if target not in targets:
            targets.append(target)

    def _add_join_edge(self, edge: JoinEdge) -> None:
        self.join_edges.append(edge)
        self._adjacency.setdefault(edge.from_table, []).append(edge)
        self._adjacency.setdefault(edge.to_table, []).append(edge)

    # -- lookups ---------------------------------------------------------------

    def lookup(self, term: str) -> list[Node]:
        return list(self.vocabulary.get(normalize_term(term), []))

    def lookup_value(self, term: str) -> list[ValueBindingTarget]:
        return list(self.value_dictionary.get(normalize_term(term), []))

    def lookup_stem(self, stemmed: str) -> list[Node]:
        """Exact-stem lookup for tokens that already went through normalize()."""
        return list(self.vocabulary.get(stemmed, []))

    def lookup_value_stem(self, stemmed: str) -> list[ValueBindingTarget]:
        return list(self.value_dictionary.get(stemmed, []))

    def attribute(self, table: str, column: str) -> Optional[AttributeNode]:
        return self.attribute_nodes.get((table, column))

    def display_name(self, node: Node) -> str:
        return node.label

    def edges_of(self, table: str) -> list[JoinEdge]:
        return list(self._adjacency.get(table, []))

    def edge_between(self, a: str, b: str) -> Optional[JoinEdge]:
        for edge in self._adjacency.get(a, []):
            if edge.touches(b):
                return edge
        return None

    def shortest_table_path(self, start: str, goal: str) -> list[JoinEdge]:
        """BFS path between two tables as a list of edges; [] when start == goal."""
        if start == goal:
            return []
        frontier = [start]
        parents: dict[str, tuple[str, JoinEdge]] = {start: (start, None)}  # type: ignore[dict-item]
        while frontier:
            next_frontier = []
            for table in frontier:
                for edge in self._adjacency.get(table, []):
                    neighbor = edge.other(table)
                    if neighbor in parents:
                        continue
                    parents[neighbor] = (table, edge)
                    if neighbor == goal:
                        path = []
                        cursor = goal
                        while cursor != start:
                            prev, via = parents[cursor]
                            path.append(via)
                            cursor = prev
                        path.reverse()
                        return path
                    next_frontier.append(neighbor)
            frontier = next_frontier
        raise NoPathBetweenTables(f"no join path between {start!r} and {goal!r}")

    def connect_tables(self, tables: list[str]) -> list[JoinEdge]:
        """Greedy Steiner-style join tree over the given tables.

        Starts from the first table and repeatedly attaches the next table
        through the shortest path from any table already in the tree.
        Deterministic for a fixed input order.
        """
        if not tables:
            return []
        in_tree = {tables[0]}
        edges: list[JoinEdge] = []
        for target in tables[1:]:
            if target in in_tree:
                continue
            best: Optional[list[JoinEdge]] = None
            for anchor in sorted(in_tree):
                try:
                    path = self.shortest_table_path(anchor, target)
                except NoPathBetweenTables:
                    continue
                if best is None or len(path) < len(best):
                    best = path
            if best is None:
                raise NoPathBetweenTables(f"cannot connect table {target!r} to the query")
            for edge in best:
                if edge not in edges:
                    edges.append(edge)
                in_tree.add(edge.from_table)
                in_tree.add(edge.to_table)
            in_tree.add(target)
        return edges


def _resolve_synonym_target(catalog: Catalog, target: str):
    """Targets: 'table', 'table.column', or 'table.column=VALUE'."""
    value = None
    column_part = target
    if "=" in target:
        column_part, value = target.split("=", 1)
    if "." in column_part:
        table, column = column_part.split(".", 1)
    else:
        table, column = column_part, None
    if table not in catalog.tables:
        raise UnknownColumnInSynonym(f"synonym target {target!r}: unknown table {table!r}")
    if column is not None and not catalog.table(table).has_column(column):
        raise UnknownColumnInSynonym(f"synonym target {target!r}: unknown column {column!r}")
    return table, column, value


def build_schema_graph(catalog: Catalog, config: Optional[dict] = None) -> SchemaGraph:
    """Build the schema graph for a catalog.

    ``config`` may carry ``synonyms`` (term -> node or value target,
    optionally display-preferred) and ``joins`` ({from, to, keys}); when
    omitted, the per-table configs recorded at ingest are merged.
    """
    if not catalog.tables:
        raise UnknownJoinKey("cannot build a schema graph over an empty catalog")

    if config is None:
        config = {"synonyms": [], "joins": []}
        for table_config in catalog.configs.values():
            config["synonyms"].extend(table_config.get("synonyms") or [])
            config["joins"].extend(table_config.get("joins") or [])

    graph = SchemaGraph()

    for table_name, table in catalog.tables.items():
        node = TableNode(table=table_name, label=table_name)
        graph.table_nodes[table_name] = node
        graph._register_term(table_name, node)
        for column in table.columns:
            attr = AttributeNode(
                table=table_name, column=column.name, kind=column.kind, label=column.name
            )
            graph.attribute_nodes[(table_name, column.name)] = attr
            graph._register_term(column.name, attr)
            if column.kind == "categorical":
                for value in table.values(column.name):
                    if value is not None:
                        graph._register_value(
                            str(value), ValueBindingTarget(table_name, column.name, str(value))
                        )

    for entry in config.get("synonyms") or []:
        term, target = entry["term"], entry["target"]
        table, column, value = _resolve_synonym_target(catalog, target)
        if value is not None:
            graph._register_value(term, ValueBindingTarget(table, column, value))
            continue
        node: Node = (
            graph.attribute_nodes[(table, column)] if column else graph.table_nodes[table]
        )
        graph._register_term(term, node, declared=True)
        if entry.get("display"):
            node.label = term

    for entry in config.get("joins") or []:
        from_table, to_table = entry.get("from"), entry.get("to")
        if from_table not in catalog.tables or to_table not in catalog.tables:
            raise UnknownJoinKey(f"join references unknown table: {entry!r}")
        for from_col, to_col in entry.get("keys") or []:
            if not catalog.table(from_table).has_column(from_col):
                raise UnknownJoinKey(f"join key {from_table}.{from_col} does not exist")
            if not catalog.table(to_table).has_column(to_col):
                raise UnknownJoinKey(f"join key {to_table}.{to_col} does not exist")
            graph._add_join_edge(JoinEdge(from_table, from_col, to_table, to_col))

    return graph
