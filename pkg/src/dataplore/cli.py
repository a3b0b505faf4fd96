"""Command-line interface.

Every subcommand exits non-zero with the domain error's code name on
failure, so scripts can branch on the first token of stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from dataplore.catalog import ingest_csv
from dataplore.config import ServiceConfig
from dataplore.dataset import fixture_path, load_dataset
from dataplore.errors import EmptyGold, ExploreError, SchemaViolation
from dataplore.explain import explain_query
from dataplore.nl import interpret
from dataplore.pipeline import SessionLog, accuracy, controllability, load_dep, run_dep
from dataplore.query import compile_to_sql
from dataplore.sets import EntitySet


def _fail(error: ExploreError) -> None:
    click.echo(f"{error.code}: {error.message}", err=True)
    sys.exit(1)


def _load(dataset_path: str | None):
    return load_dataset(dataset_path or fixture_path())


@click.group()
def main():
    """Explore CSV datasets: ask questions, run pipelines, serve the API."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True))
@click.argument("config_path", type=click.Path(exists=True))
def ingest(csv_path, config_path):
    """Validate and summarize one CSV against its schema config."""
    try:
        schema_config = json.loads(Path(config_path).read_text("utf-8"))
        catalog = ingest_csv(csv_path, schema_config)
        table = catalog.table(schema_config["table"])
        click.echo(f"ingested {table.name}: {len(table)} rows, {len(table.columns)} columns")
        for column in table.columns:
            click.echo(f"  {column.name}: {column.kind}")
    except ExploreError as error:
        _fail(error)


@main.command()
@click.argument("question")
@click.option("--n", default=3, show_default=True, help="Maximum interpretations.")
@click.option("--dataset", "dataset_path", default=None, type=click.Path(exists=True),
              help="Dataset config (defaults to the bundled fixture).")
def query(question, n, dataset_path):
    """Interpret a natural-language question and print SQL + explanation."""
    try:
        ds = _load(dataset_path)
        interpretations = interpret(question, ds.graph, ds.catalog, n=n)
        for rank, it in enumerate(interpretations, start=1):
            click.echo(f"[{rank}] score={it.score:.3f}")
            click.echo(f"    SQL: {compile_to_sql(it.ast, ds.catalog)}")
            click.echo(f"    NL:  {explain_query(it.ast, ds.graph)}")
    except ExploreError as error:
        _fail(error)


@main.command()
@click.argument("dep_path", type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", default=None, type=click.Path(exists=True))
def run(dep_path, dataset_path):
    """Execute a pipeline file and print the per-step metrics table."""
    try:
        ds = _load(dataset_path)
        dep = load_dep(dep_path)
        _, metrics = run_dep(dep, ds.catalog, ds.graph, ds.taxonomy)
        click.echo(f"{'step':<8}{'op':<14}{'size':>6}{'latency_ms':>12}{'memory_B':>10}")
        for step in metrics.steps:
            click.echo(
                f"{step.step_id:<8}{step.op:<14}{step.result_cardinality:>6}"
                f"{step.latency_ms:>12.3f}{step.memory_bytes_estimate:>10}"
            )
        click.echo(
            f"total latency {metrics.total_latency_ms:.3f} ms, "
            f"peak memory {metrics.peak_memory_bytes} B, {metrics.step_count} steps"
        )
    except ExploreError as error:
        _fail(error)


@main.command()
@click.argument("dep_path", type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="Gold entity set JSON ({base_table, label, ids}).")
@click.option("--log", "log_path", default=None, type=click.Path(exists=True),
              help="Session log (JSON lines) for controllability.")
@click.option("--dataset", "dataset_path", default=None, type=click.Path(exists=True))
def eval(dep_path, gold_path, log_path, dataset_path):
    """Run a pipeline and score its final set against a gold set."""
    try:
        ds = _load(dataset_path)
        dep = load_dep(dep_path)
        outputs, _ = run_dep(dep, ds.catalog, ds.graph, ds.taxonomy)
        gold_doc = json.loads(Path(gold_path).read_text("utf-8"))
        if not gold_doc.get("ids"):
            raise EmptyGold("gold set file contains no ids")
        gold = EntitySet.from_json(gold_doc)
        final = None
        for step in reversed(dep.steps):
            if isinstance(outputs.get(step.id), EntitySet):
                final = outputs[step.id]
                break
        if final is None:
            raise SchemaViolation("pipeline produced no entity set to evaluate")
        precision, recall, f1 = accuracy(final, gold)
        click.echo(f"precision {precision:.4f}  recall {recall:.4f}  f1 {f1:.4f}")
        if log_path:
            log = SessionLog.from_jsonl("cli", Path(log_path).read_text("utf-8"))
            value = controllability(log)
            click.echo(f"controllability {value:.4f}" if value is not None
                       else "controllability n/a (no interactions)")
    except ExploreError as error:
        _fail(error)


@main.command()
@click.option("--port", default=None, type=int, help="Override the configured port.")
@click.option("--engine-url", default=None, help="External SQL engine adapter URL.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="Service config JSON.")
def serve(port, engine_url, config_path):
    """Start the HTTP service."""
    import uvicorn

    from dataplore.service import create_app

    try:
        config = ServiceConfig.load(config_path)
        if port is not None:
            config.port = port
        if engine_url is not None:
            config.engine_url = engine_url
        uvicorn.run(create_app(config), host="127.0.0.1", port=config.port, log_level="warning")
    except ExploreError as error:
        _fail(error)


@main.command(name="export-log")
@click.argument("session_id")
@click.option("--persist-dir", required=True, type=click.Path(exists=True),
              help="Directory the service persists session logs into.")
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="Write to a file instead of stdout.")
def export_log(session_id, persist_dir, out_path):
    """Export one session's event log as JSON lines."""
    source = Path(persist_dir) / f"{session_id}.jsonl"
    if not source.exists():
        click.echo(f"UnknownSession: no persisted log for {session_id!r}", err=True)
        sys.exit(1)
    text = source.read_text("utf-8")
    if out_path:
        Path(out_path).write_text(text, "utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
