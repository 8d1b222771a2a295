"""End-to-end CLI coverage through the click runner."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from themeforge.service.cli import main

from fixture_corpus import build_fixture


@pytest.fixture(scope="module")
def cli_store(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    fixture = build_fixture(tmp / "fx", n_docs=60, k=4, min_videos_viz=4)
    store = tmp / "store"
    runner = CliRunner()

    result = runner.invoke(
        main, ["ingest", "--store", str(store), "--config", str(fixture / "config.yaml")]
    )
    assert result.exit_code == 0, result.output
    return store, fixture, runner


def invoke(runner, store, *args):
    result = runner.invoke(main, [*args, "--store", str(store)])
    assert result.exit_code == 0, result.output
    return result.output


def test_cli_pipeline_and_diagnose(cli_store):
    store, fixture, runner = cli_store
    # config was copied into the store by ingest; later commands omit --config
    for command in (
        ["extract", "--audit"],
        ["embed"],
        ["cluster", "--k", "4", "--seed", "7"],
        ["name-clusters"],
        ["curate"],
        ["tables"],
        ["engagement", "--min-occ", "5"],
        ["viz", "--perplexity", "3.0"],
        ["quality"],
        ["stance-scan"],
        ["stance-classify"],
        ["stance-tables"],
    ):
        invoke(runner, store, *command)

    assert (store / "audit.jsonl").exists()

    output = invoke(runner, store, "diagnose", "--elbow", "2:4:1", "--silhouette")
    assert "elbow k=2" in output
    assert "silhouette k=4" in output


def test_cli_dependency_error_message(tmp_path):
    fixture = build_fixture(tmp_path / "fx", n_docs=20, k=3, min_videos_viz=2)
    runner = CliRunner()
    store = tmp_path / "store"
    result = runner.invoke(
        main, ["ingest", "--store", str(store), "--config", str(fixture / "config.yaml")]
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["cluster", "--store", str(store)])
    assert result.exit_code != 0
    assert "extract" in result.output  # first missing upstream named


def test_cli_stance_eval_and_export(cli_store, tmp_path):
    store, fixture, runner = cli_store
    # fabricate a small gold file out of the predictions themselves, flipping
    # one label so accuracy sits strictly between 0 and 1
    from themeforge.service.stages import _read_jsonl
    from themeforge.service.store import ProjectStore

    predictions = _read_jsonl(
        ProjectStore(store).read_stage_file("stance_classify", "stance.jsonl")
    )
    assert predictions
    flip = {"Against": "Favor", "Favor": "Neutral", "Neutral": "Against"}
    gold_path = tmp_path / "gold.csv"
    lines = ["doc_id,target_id,label"]
    for i, record in enumerate(predictions[:12]):
        label = record["label"] if i else flip[record["label"]]
        lines.append(f"{record['doc_id']},{record['target_id']},{label}")
    gold_path.write_text("\n".join(lines) + "\n")

    output = invoke(
        runner, store, "stance-eval", "--gold", str(gold_path), "--credit", "0.5"
    )
    assert "accuracy=" in output and "soft_accuracy=" in output

    out_dir = tmp_path / "bundle"
    output = invoke(runner, store, "export", "--out", str(out_dir))
    assert (out_dir / "manifest.json").exists()
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert set(manifest["families"]) == {"tables", "engagement", "stance", "viz", "quality"}
