"""CSV ingestion into typed in-memory tables, plus column profiling.

Column kinds are declared in the schema config rather than inferred, so
two ingests of the same bytes always produce the same catalog. Empty
cells and the literal "NULL" both map to missing (None); missing never
equals the empty string.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from dataplore.errors import (
    DuplicateIdentifier,
    MalformedCsv,
    MissingIdentifier,
    SchemaViolation,
    TypeCoercion,
    UnknownColumn,
    UnknownTable,
)

COLUMN_KINDS = ("identifier", "categorical", "numeric", "text")
MISSING_TOKENS = ("", "NULL")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaViolation(f"unknown column kind {self.kind!r} for column {self.name!r}")


class Table:
    """One typed table: named columns and tuple rows, missing cells are None."""

    def __init__(self, name: str, columns: list[Column], rows: list[tuple]):
        self.name = name
        self.columns = list(columns)
        self.rows = list(rows)
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaViolation(f"duplicate column names in table {name!r}")
        id_cols = [c.name for c in self.columns if c.kind == "identifier"]
        if len(id_cols) != 1:
            raise SchemaViolation(f"table {name!r} must declare exactly one identifier column")
        self.identifier = id_cols[0]
        self._col_pos = {c.name: i for i, c in enumerate(self.columns)}
        id_pos = self._col_pos[self.identifier]
        self._row_by_id: dict = {}
        for row in self.rows:
            row_id = row[id_pos]
            if row_id is None:
                raise MissingIdentifier(f"missing identifier value in table {name!r}")
            if row_id in self._row_by_id:
                raise DuplicateIdentifier(f"duplicate identifier {row_id!r} in table {name!r}")
            self._row_by_id[row_id] = row
        self.ids = tuple(sorted(self._row_by_id))

    def column(self, name: str) -> Column:
        try:
            return self.columns[self._col_pos[name]]
        except KeyError:
            raise UnknownColumn(f"table {self.name!r} has no column {name!r}") from None

    def has_column(self, name: str) -> bool:
        return name in self._col_pos

    def column_position(self, name: str) -> int:
        self.column(name)
        return self._col_pos[name]

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def row(self, row_id):
        return self._row_by_id[row_id]

    def value(self, row_id, column: str):
        return self._row_by_id[row_id][self.column_position(column)]

    def values(self, column: str) -> list:
        pos = self.column_position(column)
        return [row[pos] for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


class Catalog:
    """A set of tables plus per-table config carried along for graph building.

    Immutable by convention once loaded; the only internal mutability is
    the lazily built, lock-protected join-index cache used by joins.
    """

    def __init__(self):
        self.tables: dict[str, Table] = {}
        self.configs: dict[str, dict] = {}
        self._join_indexes: dict[tuple[str, str], dict] = {}
        self._join_lock = threading.Lock()

    def add_table(self, table: Table, config: Optional[dict] = None) -> None:
        if table.name in self.tables:
            raise SchemaViolation(f"table {table.name!r} already ingested")
        self.tables[table.name] = table
        self.configs[table.name] = dict(config or {})

    def table(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(f"no table named {name!r}") from None

    def table_names(self) -> list[str]:
        return list(self.tables)

    def join_index(self, table: str, column: str) -> dict:
        """value -> sorted row ids; built lazily, cached, safe for readers."""
        key = (table, column)
        cached = self._join_indexes.get(key)
        if cached is not None:
            return cached
        with self._join_lock:
            cached = self._join_indexes.get(key)
            if cached is not None:
                return cached
            tbl = self.table(table)
            pos = tbl.column_position(column)
            id_pos = tbl.column_position(tbl.identifier)
            index: dict = {}
            for row in tbl.rows:
                value = row[pos]
                if value is None:
                    continue  # missing keys never join
                index.setdefault(value, []).append(row[id_pos])
            for ids in index.values():
                ids.sort()
            self._join_indexes[key] = index
            return index


def _coerce_cell(raw: str, kind: str, *, table: str, column: str, row_number: int):
    if raw in MISSING_TOKENS:
        return None
    if kind == "numeric":
        try:
            value = float(raw)
        except ValueError:
            raise TypeCoercion(
                f"cannot parse {raw!r} as a number",
                location=f"{table}.{column} row {row_number}",
            ) from None
        if not math.isfinite(value):
            raise TypeCoercion(
                f"non-finite number {raw!r}",
                location=f"{table}.{column} row {row_number}",
            )
        return int(value) if value.is_integer() else value
    return raw


def ingest_csv(path: str | Path, schema_config: dict, catalog: Optional[Catalog] = None) -> Catalog:
    """Ingest one CSV file (RFC-4180, header row required) into a catalog.

    ``schema_config`` declares the table name, the identifier column, and
    every column's kind; see the bundled fixture's dataset.json for the
    document shape. Returns the given catalog (or a fresh one) with the
    table added.
    """
    table_name = schema_config.get("table")
    if not table_name:
        raise SchemaViolation("schema config must declare a 'table' name")
    declared = schema_config.get("columns") or []
    kinds = {}
    for entry in declared:
        if "name" not in entry or "kind" not in entry:
            raise SchemaViolation(f"column entries need 'name' and 'kind': {entry!r}")
        kinds[entry["name"]] = entry["kind"]
    identifier = schema_config.get("identifier")
    if not identifier:
        raise SchemaViolation(f"schema config for {table_name!r} must declare an 'identifier'")

    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: no header row") from None
        columns = []
        for name in header:
            kind = kinds.get(name)
            if kind is None:
                kind = "identifier" if name == identifier else None
            if kind is None:
                raise SchemaViolation(
                    f"column {name!r} in {path} is not declared in the schema config"
                )
            columns.append(Column(name, kind))
        if identifier not in [c.name for c in columns]:
            raise SchemaViolation(f"identifier column {identifier!r} not present in {path}")

        rows = []
        for row_number, raw_row in enumerate(reader, start=2):
            if len(raw_row) != len(columns):
                raise MalformedCsv(
                    f"row has {len(raw_row)} cells, expected {len(columns)}",
                    location=f"{table_name} row {row_number}",
                )
            rows.append(
                tuple(
                    _coerce_cell(
                        cell, col.kind, table=table_name, column=col.name, row_number=row_number
                    )
                    for cell, col in zip(raw_row, columns)
                )
            )

    catalog = catalog if catalog is not None else Catalog()
    catalog.add_table(Table(table_name, columns, rows), schema_config)
    return catalog


@dataclass(frozen=True)
class ColumnProfile:
    """Summary statistics for one column, feeding starter-query scoring."""

    table: str
    column: str
    kind: str
    distinct_count: int
    null_count: int
    entropy: float
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    mean: Optional[float] = None
    frequencies: dict = field(default_factory=dict)


def profile_column(catalog: Catalog, table: str, column: str) -> ColumnProfile:
    """Profile a column: counts, numeric stats, categorical frequencies, entropy.

    Entropy is the natural-log Shannon entropy of the non-missing value
    frequencies; a constant (or empty) column has entropy 0.
    """
    tbl = catalog.table(table)
    col = tbl.column(column)
    values = [v for v in tbl.values(column) if v is not None]
    null_count = len(tbl) - len(values)

    counts: dict = {}
    for value in values:
        counts[value] = counts.get(value, 0) + 1

    entropy = 0.0
    if len(counts) > 1:
        total = len(values)
        entropy = -sum((c / total) * math.log(c / total) for c in counts.values())

    minimum = maximum = mean = None
    if col.kind == "numeric" and values:
        minimum = min(values)
        maximum = max(values)
        mean = sum(values) / len(values)

    frequencies = dict(sorted(counts.items())) if col.kind == "categorical" else {}
    return ColumnProfile(
        table=table,
        column=column,
        kind=col.kind,
        distinct_count=len(counts),
        null_count=null_count,
        entropy=entropy,
        minimum=minimum,
        maximum=maximum,
        mean=mean,
        frequencies=frequencies,
    )


def profile_catalog(catalog: Catalog) -> dict[tuple[str, str], ColumnProfile]:
    """Profile every column of every table."""
    profiles = {}
    for table_name in catalog.table_names():
        for column in catalog.table(table_name).column_names():
            profiles[(table_name, column)] = profile_column(catalog, table_name, column)
    return profiles
