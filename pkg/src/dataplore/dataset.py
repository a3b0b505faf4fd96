"""Dataset loading: a dataset config names CSV tables (each with its
schema config), dataset-wide synonyms/joins, and an optional taxonomy.

The bundled fixture dataset (three small tables about research projects,
organizations, and their participation links) backs the CLI and service
defaults and most of the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from dataplore.catalog import Catalog, ingest_csv
from dataplore.errors import SchemaViolation
from dataplore.ops import Taxonomy
from dataplore.schema import SchemaGraph, build_schema_graph


@dataclass
class Dataset:
    name: str
    catalog: Catalog
    graph: SchemaGraph
    taxonomy: Optional[Taxonomy] = None


def load_dataset(config_path: str | Path) -> Dataset:
    """Load a dataset config document and all CSV tables it names."""
    config_path = Path(config_path)
    doc = json.loads(config_path.read_text("utf-8"))
    tables = doc.get("tables")
    if not tables:
        raise SchemaViolation(f"{config_path}: dataset config declares no tables")

    catalog = Catalog()
    merged = {"synonyms": list(doc.get("synonyms") or []), "joins": list(doc.get("joins") or [])}
    for entry in tables:
        csv_name = entry.get("csv")
        if not csv_name:
            raise SchemaViolation(f"table entry missing 'csv' path: {entry!r}")
        ingest_csv(config_path.parent / csv_name, entry, catalog)
        merged["synonyms"].extend(entry.get("synonyms") or [])
        merged["joins"].extend(entry.get("joins") or [])

    graph = build_schema_graph(catalog, merged)
    taxonomy = Taxonomy.from_json(doc["taxonomy"]) if doc.get("taxonomy") else None
    return Dataset(
        name=doc.get("name", config_path.stem),
        catalog=catalog,
        graph=graph,
        taxonomy=taxonomy,
    )


def fixture_path() -> Path:
    """Filesystem path of the bundled fixture's dataset.json."""
    return Path(str(resources.files("dataplore.data").joinpath("fixture/dataset.json")))


def load_fixture() -> Dataset:
    return load_dataset(fixture_path())
