"""dataplore: a desk-scale data exploration engine.

Natural-language querying with disambiguation, NL explanations of
queries and result relationships, set-based exploration operators with
SQL and in-memory backends, next-step recommendation, and a pipeline
evaluation harness — usable as a library, a CLI, or an HTTP service.
"""

from dataplore.catalog import Catalog, ColumnProfile, ingest_csv, profile_column
from dataplore.dataset import Dataset, load_dataset, load_fixture
from dataplore.schema import SchemaGraph, build_schema_graph
from dataplore.sets import EntitySet, OverlapIndex, RccRelation, jaccard, rcc_relation, set_algebra

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "ColumnProfile",
    "Dataset",
    "EntitySet",
    "OverlapIndex",
    "RccRelation",
    "SchemaGraph",
    "build_schema_graph",
    "ingest_csv",
    "jaccard",
    "load_dataset",
    "load_fixture",
    "profile_column",
    "rcc_relation",
    "set_algebra",
    "__version__",
]
