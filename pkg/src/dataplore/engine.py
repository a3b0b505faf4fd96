"""Pluggable external SQL engine adapter.

The contract is a single method, ``execute(sql) -> ResultTable``, over a
connection configured by URL. A SQLite-backed implementation ships in
the box so the backend-equivalence checks can run against a real SQL
engine without any external service; other engines only need to honor
the same one-method contract.
"""

from __future__ import annotations

import sqlite3
from typing import Protocol

from dataplore.catalog import Catalog
from dataplore.query import ResultTable


class SqlEngine(Protocol):
    def execute(self, sql: str) -> ResultTable: ...


_SQL_TYPES = {"identifier": "TEXT", "categorical": "TEXT", "text": "TEXT", "numeric": "REAL"}


class SqliteEngine:
    """SQLite adapter; URLs look like sqlite://:memory: or sqlite:///path.db."""

    def __init__(self, url: str = "sqlite://:memory:"):
        if not url.startswith("sqlite://"):
            raise ValueError(f"unsupported engine url {url!r}")
        target = url[len("sqlite://"):]
        if target in ("", ":memory:"):
            target = ":memory:"
        else:
            target = target.lstrip("/") if not target.startswith("/") else target
        self._conn = sqlite3.connect(target, check_same_thread=False)
        # ASCII LIKE must stay case sensitive to match the in-memory 'contains'
        self._conn.execute("PRAGMA case_sensitive_like = ON")

    @classmethod
    def from_catalog(cls, catalog: Catalog, url: str = "sqlite://:memory:") -> "SqliteEngine":
        """Materialize every catalog table into the engine."""
        engine = cls(url)
        for name in catalog.table_names():
            table = catalog.table(name)
            columns = ", ".join(
                f'"{c.name}" {_SQL_TYPES[c.kind]}' for c in table.columns
            )
            engine._conn.execute(f'CREATE TABLE "{name}" ({columns})')
            placeholders = ", ".join("?" for _ in table.columns)
            engine._conn.executemany(
                f'INSERT INTO "{name}" VALUES ({placeholders})', table.rows
            )
        engine._conn.commit()
        return engine

    def execute(self, sql: str) -> ResultTable:
        cursor = self._conn.execute(sql)
        headers = [d[0] for d in cursor.description] if cursor.description else []
        return ResultTable(headers=headers, rows=[tuple(r) for r in cursor.fetchall()])

    def close(self) -> None:
        self._conn.close()


def engine_from_url(url: str, catalog: Catalog) -> SqlEngine:
    """Build the adapter named by the URL, loaded with the catalog."""
    if url.startswith("sqlite://"):
        return SqliteEngine.from_catalog(catalog, url)
    raise ValueError(f"no engine adapter for url {url!r}")
