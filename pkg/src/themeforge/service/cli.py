"""The `forge` command line: pipeline stages, diagnostics, service, export."""

from __future__ import annotations

import dataclasses
import sys

import click
import numpy as np
import yaml

from .. import clusters as clustering_mod
from ..errors import ThemeforgeError
from ..gateway import GatewayConfig
from ..stance import StanceEvalConfig, accuracy, read_gold_csv, soft_accuracy
from ..stance.classify import RecordOrigin, StanceLabel, StanceRecord
from .export import export_report
from .stages import Pipeline, ProjectConfig, load_embeddings, _read_jsonl
from .store import ProjectStore


def _load_config(store: ProjectStore, config_path: str | None) -> ProjectConfig:
    if config_path:
        return ProjectConfig.load(config_path)
    default = store.root / "config.yaml"
    if default.exists():
        return ProjectConfig.load(default)
    raise click.ClickException(
        "no config: pass --config or place config.yaml in the store"
    )


def _pipeline(store_dir: str, config_path: str | None, audit: bool = False, **overrides) -> Pipeline:
    store = ProjectStore(store_dir)
    config = _load_config(store, config_path)
    config = dataclasses.replace(
        config, **{k: v for k, v in overrides.items() if v is not None}
    )
    _persist_config(store, config)
    gateway = GatewayConfig(
        audit_path=str(store.root / "audit.jsonl") if audit else None
    )
    return Pipeline(store, config, gateway)


def _persist_config(store: ProjectStore, config: ProjectConfig) -> None:
    """Keep the store's config.yaml equal to the effective config.

    Flag overrides (e.g. `cluster --k`) thereby stick for later commands,
    and stage signatures stay reconstructible from the store alone.
    """
    rendered = yaml.safe_dump(dataclasses.asdict(config), sort_keys=True)
    path = store.root / "config.yaml"
    if not path.exists() or path.read_text(encoding="utf-8") != rendered:
        store.root.mkdir(parents=True, exist_ok=True)
        path.write_text(rendered, encoding="utf-8")


def _run_stage(pipeline: Pipeline, stage: str) -> None:
    try:
        entry = pipeline.run(stage)
    except ThemeforgeError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    click.echo(f"{stage}: ok ({entry['signature'][:12]})")


store_option = click.option("--store", "store_dir", required=True, help="project store directory")
config_option = click.option("--config", "config_path", default=None, help="config YAML path")
seed_option = click.option("--seed", type=int, default=None, help="override config seed")


@click.group()
def main():
    """Transcript themes pipeline: extract, cluster, curate, analyze."""


@main.command()
@store_option
@config_option
def ingest(store_dir, config_path):
    """Ingest and filter the corpus into the store."""
    _run_stage(_pipeline(store_dir, config_path), "ingest")


@main.command()
@store_option
@config_option
@click.option("--backend", default=None, help="'mock' or a remote generation endpoint URL")
@click.option("--audit", is_flag=True, help="log request/response bodies to the store")
def extract(store_dir, config_path, backend, audit):
    """Extract topics from every transcript."""
    overrides = {}
    if backend == "mock":
        overrides["generation"] = {"kind": "MockGeneration", "seed": 1}
    elif backend:
        overrides["generation"] = {"kind": "RemoteGeneration", "endpoint": backend}
    pipeline = _pipeline(store_dir, config_path, audit=audit, **overrides)
    _run_stage(pipeline, "extract")


@main.command()
@store_option
@config_option
def embed(store_dir, config_path):
    """Embed extracted topics."""
    _run_stage(_pipeline(store_dir, config_path), "embed")


@main.command()
@store_option
@config_option
@click.option("--k", type=int, default=None, help="number of clusters")
@seed_option
def cluster(store_dir, config_path, k, seed):
    """Cluster topic embeddings with spherical k-means."""
    _run_stage(_pipeline(store_dir, config_path, k=k, seed=seed), "cluster")


@main.command()
@store_option
@config_option
@click.option("--elbow", default=None, help="k range start:stop:step")
@click.option("--silhouette", "want_silhouette", is_flag=True)
@seed_option
def diagnose(store_dir, config_path, elbow, want_silhouette, seed):
    """Print cluster-count diagnostics (never auto-applied)."""
    pipeline = _pipeline(store_dir, config_path, seed=seed)
    embeddings = load_embeddings(pipeline.store)
    keys = sorted(embeddings)
    matrix = np.stack([embeddings[k] for k in keys])
    try:
        if elbow:
            start, stop, step = (int(p) for p in elbow.split(":"))
            ks = list(range(start, stop + 1, step))
            for k, inertia in clustering_mod.elbow_curve(matrix, ks, pipeline.config.seed):
                click.echo(f"elbow k={k} inertia={inertia:.6f}")
        if want_silhouette:
            result = clustering_mod.kmeans(
                matrix, pipeline.config.k, pipeline.config.seed, pipeline.config.kmeans_max_iter
            )
            score = clustering_mod.silhouette(matrix, result)
            click.echo(f"silhouette k={pipeline.config.k} score={score:.6f}")
    except ThemeforgeError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")


@main.command(name="name-clusters")
@store_option
@config_option
def name_clusters(store_dir, config_path):
    """Name each cluster from its member topics."""
    _run_stage(_pipeline(store_dir, config_path), "name")


@main.command()
@store_option
@config_option
def curate(store_dir, config_path):
    """Initialize the merge map (identity) for the current clustering."""
    _run_stage(_pipeline(store_dir, config_path), "curate")


@main.command()
@store_option
@config_option
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8765)
def serve(store_dir, config_path, host, port):
    """Serve cluster/theme state and curation mutations over HTTP."""
    import uvicorn

    from .api import create_app

    try:
        app = create_app(ProjectStore(store_dir))
    except ThemeforgeError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@store_option
@config_option
def tables(store_dir, config_path):
    """Theme frequency tables by group and period."""
    _run_stage(_pipeline(store_dir, config_path), "tables")


@main.command()
@store_option
@config_option
@click.option("--metric", type=click.Choice(["like", "comment"]), default=None,
              help="restrict to one ratio (default: both)")
@click.option("--min-occ", "min_occ", type=int, default=None)
def engagement(store_dir, config_path, metric, min_occ):
    """Engagement-ratio rankings per theme within each group."""
    overrides = {}
    if min_occ is not None:
        overrides["engagement_min_occurrence"] = min_occ
    if metric is not None:
        overrides["engagement_metrics"] = [
            "LikePerView" if metric == "like" else "CommentPerView"
        ]
    _run_stage(_pipeline(store_dir, config_path, **overrides), "engagement")


@main.command()
@store_option
@config_option
@click.option("--perplexity", type=float, default=None)
@click.option("--seed", "viz_seed", type=int, default=None,
              help="projection seed (does not touch the clustering seed)")
def viz(store_dir, config_path, perplexity, viz_seed):
    """Channel theme vectors and the 2-D channel map."""
    overrides = {}
    if perplexity is not None:
        overrides["viz_perplexity"] = perplexity
    if viz_seed is not None:
        overrides["viz_seed"] = viz_seed
    _run_stage(_pipeline(store_dir, config_path, **overrides), "viz")


@main.command()
@store_option
@config_option
@click.option("--groups", "groups_path", default=None, help="JSON group->channels file")
def quality(store_dir, config_path, groups_path):
    """Cluster-quality scores for declared channel groups."""
    overrides = {"quality_groups_path": groups_path} if groups_path else {}
    _run_stage(_pipeline(store_dir, config_path, **overrides), "quality")


@main.command(name="stance-scan")
@store_option
@config_option
def stance_scan(store_dir, config_path):
    """Find target mentions and flag under-covered targets."""
    _run_stage(_pipeline(store_dir, config_path), "stance_scan")


@main.command(name="stance-classify")
@store_option
@config_option
def stance_classify(store_dir, config_path):
    """Classify stance for every relevant (doc, target) pair."""
    _run_stage(_pipeline(store_dir, config_path), "stance_classify")


@main.command(name="stance-tables")
@store_option
@config_option
def stance_tables(store_dir, config_path):
    """Stance distribution tables by orientation and target."""
    _run_stage(_pipeline(store_dir, config_path), "stance_tables")


@main.command(name="stance-eval")
@store_option
@config_option
@click.option("--gold", "gold_path", required=True, help="gold labels CSV")
@click.option("--credit", type=float, default=0.5, help="neutral partial credit")
def stance_eval(store_dir, config_path, gold_path, credit):
    """Accuracy and soft accuracy of predictions against a gold file."""
    store = ProjectStore(store_dir)
    try:
        raw = _read_jsonl(store.read_stage_file("stance_classify", "stance.jsonl"))
        gold = read_gold_csv(gold_path)
        gold_keys = {(g.doc_id, g.target_id) for g in gold}
        pred = [
            StanceRecord(
                doc_id=r["doc_id"],
                target_id=r["target_id"],
                label=StanceLabel(r["label"]),
                origin=RecordOrigin.PREDICTED,
            )
            for r in raw
            if (r["doc_id"], r["target_id"]) in gold_keys
        ]
        acc = accuracy(pred, gold)
        soft = soft_accuracy(pred, gold, StanceEvalConfig(neutral_partial_credit=credit))
    except ThemeforgeError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    click.echo(f"n={len(pred)} accuracy={acc:.4f} soft_accuracy={soft:.4f} (c={credit})")


@main.command()
@store_option
@config_option
@click.option("--out", "out_dir", required=True, help="bundle output directory")
def export(store_dir, config_path, out_dir):
    """Export the report bundle (CSV families + provenance manifest)."""
    store = ProjectStore(store_dir)
    try:
        report = export_report(store, out_dir)
    except ThemeforgeError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    for name in report.written:
        click.echo(f"wrote {name}")
    for family in report.missing:
        click.echo(f"warning: family {family} missing prerequisites", err=True)


if __name__ == "__main__":
    sys.exit(main())
