"""Report bundle export: the five CSV families plus a provenance manifest."""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .store import ProjectStore, sha256_file

# family name -> (stage, files)
FAMILIES: dict[str, tuple[str, tuple[str, ...]]] = {
    "tables": (
        "tables",
        (
            "frequency.csv",
            "themes_summary.csv",
            "clusters_summary.csv",
            "coherence_summary.csv",
            "theme_similarity.csv",
        ),
    ),
    "engagement": ("engagement", ("engagement.csv", "group_means.csv")),
    "stance": (
        "stance_tables",
        (
            "stance_by_orientation.csv",
            "stance_by_target.csv",
            "stance_by_orientation_target.csv",
        ),
    ),
    "viz": ("viz", ("layout.csv", "channel_vectors.csv")),
    "quality": ("quality", ("quality.csv",)),
}


@dataclass
class ExportReport:
    out_dir: Path
    written: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.missing


def export_report(store: ProjectStore, out_dir: str | Path) -> ExportReport:
    """Copy each family's current outputs into `out_dir`, hash-verified.

    Missing stages degrade to a partial bundle: the family is skipped and
    listed under `missing` (and in the bundle manifest as a warning).
    Exporting an unchanged store twice produces byte-identical bundles.
    """
    out_dir = Path(out_dir)
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True)
    manifest = store.load_manifest()
    report = ExportReport(out_dir=out_dir)
    bundle_manifest: dict = {"families": {}, "warnings": [], "stages": {}}

    for family in sorted(FAMILIES):
        stage, files = FAMILIES[family]
        entry = manifest["stages"].get(stage)
        if entry is None:
            report.missing.append(family)
            bundle_manifest["warnings"].append(
                f"family {family} skipped: stage {stage} not run"
            )
            continue
        store.verify_stage_files(stage)
        family_dir = out_dir / family
        family_dir.mkdir()
        family_files = {}
        for filename in files:
            src = store.root / entry["dir"] / filename
            dst = family_dir / filename
            shutil.copyfile(src, dst)
            family_files[filename] = sha256_file(dst)
            report.written.append(f"{family}/{filename}")
        bundle_manifest["families"][family] = family_files
        bundle_manifest["stages"][stage] = {
            "signature": entry["signature"],
            "config": entry["config"],
        }

    (out_dir / "manifest.json").write_text(
        json.dumps(bundle_manifest, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    return report
