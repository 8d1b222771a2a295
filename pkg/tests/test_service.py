"""Store staging semantics, curation API, and export bundles."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from themeforge.errors import ConflictError, CorruptStoreError, DependencyError
from themeforge.service import Pipeline, ProjectConfig, ProjectStore, export_report
from themeforge.service.api import create_app
from themeforge.service.stages import load_assignments

from fixture_corpus import ALL_STAGES, build_fixture


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory) -> Pipeline:
    tmp = tmp_path_factory.mktemp("svc")
    fixture = build_fixture(tmp / "fx", n_docs=60, k=6, min_videos_viz=4)
    config = ProjectConfig.load(fixture / "config.yaml")
    pipe = Pipeline(ProjectStore(tmp / "store"), config)
    for stage in ALL_STAGES:
        pipe.run(stage)
    return pipe


def fresh_pipeline(tmp_path, n_docs=30, k=4, **kwargs) -> Pipeline:
    fixture = build_fixture(tmp_path / "fx", n_docs=n_docs, k=k, min_videos_viz=4, **kwargs)
    config = ProjectConfig.load(fixture / "config.yaml")
    return Pipeline(ProjectStore(tmp_path / "store"), config)


# -- staging ------------------------------------------------------------------


def test_cluster_before_embed_names_missing_stage(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    pipe.run("ingest")
    pipe.run("extract")
    with pytest.raises(DependencyError) as err:
        pipe.run("cluster")
    assert str(err.value) == "embed"


def test_rerun_is_noop_with_same_hash(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    pipe.run("ingest")
    first = pipe.run("extract")
    manifest_before = pipe.store.manifest_path.read_bytes()
    second = pipe.run("extract")
    assert first["signature"] == second["signature"]
    assert pipe.store.manifest_path.read_bytes() == manifest_before


def test_config_change_invalidates_downstream(tmp_path):
    import dataclasses

    pipe = fresh_pipeline(tmp_path)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate"):
        pipe.run(stage)
    old_cluster_sig = pipe.store.stage_entry("cluster")["signature"]

    changed = Pipeline(pipe.store, dataclasses.replace(pipe.config, k=3))
    with pytest.raises(DependencyError) as err:
        changed.run("name")  # cluster is stale under the new k
    assert str(err.value) == "cluster"
    changed.run("cluster")
    assert pipe.store.stage_entry("cluster")["signature"] != old_cluster_sig
    changed.run("name")
    changed.run("curate")
    changed.run("tables")


def test_crash_between_write_and_commit_preserves_manifest(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    pipe.run("ingest")
    manifest_before = pipe.store.manifest_path.read_bytes()

    def boom():
        raise RuntimeError("injected crash")

    pipe.store._pre_commit_hook = boom
    with pytest.raises(RuntimeError, match="injected crash"):
        pipe.run("extract")
    pipe.store._pre_commit_hook = None

    assert pipe.store.manifest_path.read_bytes() == manifest_before
    pipe.store.verify_stage_files("ingest")  # prior outputs still hash-verify
    assert pipe.store.stage_entry("extract") is None
    pipe.run("extract")  # recovery just works


def test_tampered_output_detected(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    pipe.run("ingest")
    pipe.run("extract")
    topics_path = pipe.store.stage_dir("extract") / "topics.jsonl"
    topics_path.write_text(topics_path.read_text() + "\n")
    with pytest.raises(CorruptStoreError, match="hash mismatch"):
        pipe.run("embed")


def test_merge_map_mutation_invalidates_tables_only(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate", "tables"):
        pipe.run(stage)
    tables_sig = pipe.store.stage_entry("tables")["signature"]

    merge_map = pipe.store.load_merge_map()
    clusters = sorted(set(load_assignments(pipe.store).values()))
    merge_map.apply_action(
        "merge", {"cluster_ids": clusters[:2], "theme_name": "Fusion"}, "tester", 0, "t"
    )
    pipe.store.save_merge_map(merge_map)

    # curate/name/cluster remain fresh; tables is stale and reruns
    entry = pipe.run("tables")
    assert entry["signature"] != tables_sig
    pipe.run("curate")  # still a no-op: merge map must survive
    assert pipe.store.load_merge_map().version == 1


def test_curate_reinitializes_only_when_clustering_changes(tmp_path):
    import dataclasses

    pipe = fresh_pipeline(tmp_path)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate"):
        pipe.run(stage)
    merge_map = pipe.store.load_merge_map()
    merge_map.apply_action("rename", {"theme_id": "t0", "name": "Garde"}, "t", 0, "t")
    pipe.store.save_merge_map(merge_map)

    pipe.run("curate")  # fresh -> keeps the curated state
    assert pipe.store.load_merge_map().version == 1

    changed = Pipeline(pipe.store, dataclasses.replace(pipe.config, k=3))
    changed.run("cluster")
    changed.run("name")
    changed.run("curate")  # clustering changed -> identity reset
    reset = changed.store.load_merge_map()
    assert reset.version == 0
    assert set(reset.entries) == set(range(3))


# -- HTTP API -----------------------------------------------------------------


@pytest.fixture()
def client(pipeline) -> TestClient:
    return TestClient(create_app(pipeline.store))


def test_get_clusters_card_shape(client, pipeline):
    payload = client.get("/api/clusters").json()
    assert payload["version"] == pipeline.store.load_merge_map().version
    cards = payload["clusters"]
    assert len(cards) == pipeline.config.k
    for card in cards:
        assert set(card) >= {
            "cluster_id",
            "name",
            "size",
            "sample_topics",
            "coherence",
            "review_largest",
            "review_smallest",
            "theme_id",
        }
        assert len(card["sample_topics"]) <= 20
        assert -1.0 <= card["coherence"] <= 1.0
    # k=6 <= 60: every cluster sits in both review queues
    assert all(c["review_largest"] and c["review_smallest"] for c in cards)


def test_cluster_detail_and_404(client):
    detail = client.get("/api/clusters/0").json()
    assert detail["cluster_id"] == 0
    assert detail["size"] == len(detail["topics"])
    assert client.get("/api/clusters/999").status_code == 404


def test_merge_conflict_and_read_your_writes(client):
    version = client.get("/api/themes").json()["version"]

    stale = client.post(
        "/api/curation",
        json={
            "kind": "merge",
            "payload": {"cluster_ids": [0, 1], "theme_name": "Ensemble"},
            "base_version": version + 41,
        },
    )
    assert stale.status_code == 409
    assert stale.json()["detail"]["current_version"] == version

    ok = client.post(
        "/api/curation",
        json={
            "kind": "merge",
            "payload": {"cluster_ids": [0, 1], "theme_name": "Ensemble"},
            "base_version": version,
        },
    )
    assert ok.status_code == 200
    new_version = ok.json()["version"]
    assert new_version == version + 1

    themes = client.get("/api/themes").json()
    assert themes["version"] == new_version
    merged = [t for t in themes["themes"] if t["name"] == "Ensemble"]
    assert len(merged) == 1
    assert set(merged[0]["clusters"]) >= {0, 1}

    history = client.get("/api/history").json()["history"]
    assert history[-1]["kind"] == "merge"
    assert history[-1]["version"] == new_version


def test_malformed_action_rejected(client):
    version = client.get("/api/themes").json()["version"]
    bad = client.post(
        "/api/curation",
        json={
            "kind": "merge",
            "payload": {"cluster_ids": [0], "theme_name": "Seul"},
            "base_version": version,
        },
    )
    assert bad.status_code == 400
    assert client.get("/api/themes").json()["version"] == version


def test_layout_endpoint_serves_viz(client):
    payload = client.get("/api/layout").json()
    assert payload["points"], "viz stage ran, layout must be nonempty"
    for point in payload["points"]:
        assert set(point) == {"channel_id", "x", "y", "orientation", "top_themes"}
        assert len(point["top_themes"]) <= 5


def test_layout_404_when_viz_missing(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate"):
        pipe.run(stage)
    client = TestClient(create_app(pipe.store))
    assert client.get("/api/layout").status_code == 404


def test_metrics_endpoint(client):
    payload = client.get("/api/metrics").json()
    assert payload["frequency"]
    assert payload["clusters_summary"]
    assert {row["cluster_id"] for row in payload["clusters_summary"]} == {
        str(i) for i in range(6)
    }


# -- export ---------------------------------------------------------------


def test_export_complete_bundle(pipeline, tmp_path):
    report = export_report(pipeline.store, tmp_path / "bundle")
    assert report.complete
    families = {p.name for p in (tmp_path / "bundle").iterdir() if p.is_dir()}
    assert families == {"tables", "engagement", "stance", "viz", "quality"}
    manifest = json.loads((tmp_path / "bundle" / "manifest.json").read_text())
    assert manifest["warnings"] == []
    assert set(manifest["families"]) == families


def test_export_byte_identical_on_unchanged_store(pipeline, tmp_path):
    export_report(pipeline.store, tmp_path / "b1")
    export_report(pipeline.store, tmp_path / "b2")
    files1 = sorted(p.relative_to(tmp_path / "b1") for p in (tmp_path / "b1").rglob("*") if p.is_file())
    files2 = sorted(p.relative_to(tmp_path / "b2") for p in (tmp_path / "b2").rglob("*") if p.is_file())
    assert files1 == files2
    for rel in files1:
        assert (tmp_path / "b1" / rel).read_bytes() == (tmp_path / "b2" / rel).read_bytes()


def test_export_partial_bundle_with_warning(tmp_path):
    pipe = fresh_pipeline(tmp_path)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate", "tables"):
        pipe.run(stage)
    report = export_report(pipe.store, tmp_path / "bundle")
    assert not report.complete
    assert "stance" in report.missing
    manifest = json.loads((tmp_path / "bundle" / "manifest.json").read_text())
    assert any("stance" in w for w in manifest["warnings"])
    assert (tmp_path / "bundle" / "tables" / "frequency.csv").exists()


def test_viz_seed_change_leaves_clustering_fresh(tmp_path):
    import dataclasses

    pipe = fresh_pipeline(tmp_path, n_docs=60, k=6)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate", "viz"):
        pipe.run(stage)
    cluster_sig = pipe.store.stage_entry("cluster")["signature"]
    viz_sig = pipe.store.stage_entry("viz")["signature"]

    reseeded = Pipeline(pipe.store, dataclasses.replace(pipe.config, viz_seed=123))
    entry = reseeded.run("viz")
    assert entry["signature"] != viz_sig
    assert pipe.store.stage_entry("cluster")["signature"] == cluster_sig
    reseeded.run("cluster")  # still a no-op
    assert pipe.store.stage_entry("cluster")["signature"] == cluster_sig


def test_engagement_metric_restriction(tmp_path):
    import csv as csv_mod
    import dataclasses
    import io

    pipe = fresh_pipeline(tmp_path, n_docs=60, k=6)
    for stage in ("ingest", "extract", "embed", "cluster", "name", "curate"):
        pipe.run(stage)
    only_likes = Pipeline(
        pipe.store,
        dataclasses.replace(
            pipe.config,
            engagement_metrics=["LikePerView"],
            engagement_min_occurrence=2,
        ),
    )
    only_likes.run("engagement")
    data = pipe.store.read_stage_file("engagement", "engagement.csv").decode()
    metrics = {row["metric"] for row in csv_mod.DictReader(io.StringIO(data))}
    assert metrics == {"LikePerView"}

    both = Pipeline(
        pipe.store, dataclasses.replace(pipe.config, engagement_min_occurrence=2)
    )
    both.run("engagement")
    data = pipe.store.read_stage_file("engagement", "engagement.csv").decode()
    metrics = {row["metric"] for row in csv_mod.DictReader(io.StringIO(data))}
    assert metrics == {"LikePerView", "CommentPerView"}


def test_tables_side_reports(pipeline):
    import csv as csv_mod
    import io

    data = pipeline.store.read_stage_file("tables", "coherence_summary.csv").decode()
    rows = {r["statistic"]: float(r["value"]) for r in csv_mod.DictReader(io.StringIO(data))}
    assert set(rows) == {"intra_theme_mean_unweighted", "intra_theme_mean_size_weighted"}
    assert all(-1.0 <= v <= 1.0 for v in rows.values())

    data = pipeline.store.read_stage_file("tables", "theme_similarity.csv").decode()
    sims = list(csv_mod.DictReader(io.StringIO(data)))
    k = pipeline.config.k
    assert len(sims) == k * (k - 1) // 2  # identity map: one theme per cluster
    assert all(-1.0 - 1e-9 <= float(r["medoid_cosine"]) <= 1.0 + 1e-9 for r in sims)

    data = pipeline.store.read_stage_file("engagement", "group_means.csv").decode()
    means = list(csv_mod.DictReader(io.StringIO(data)))
    assert means, "per-group mean ratios must be reported"
    assert {r["statistic"] for r in means} == {"per_video_mean"}
    assert all(float(r["value"]) >= 0 for r in means)
