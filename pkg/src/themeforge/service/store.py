"""Content-hash staged project store.

Every pipeline stage writes its outputs under a directory named by the
stage's input signature (a hash of its config slice, its upstream
signatures, and any external input files). Reruns with unchanged inputs
short-circuit; changing any input re-signs the stage and everything
downstream. Outputs land via temp-dir + rename, and the manifest via
temp-file + rename, so a crash mid-commit leaves the previous manifest and
its outputs fully intact.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from pathlib import Path

from ..errors import CorruptStoreError, DependencyError, UsageError
from ..themes import MergeMap

STORE_VERSION = 1
MANIFEST_NAME = "manifest.json"
MERGE_MAP_NAME = "merge_map.json"

# stage -> direct upstream stages; topological order is the dict order
STAGE_DEPS: dict[str, tuple[str, ...]] = {
    "ingest": (),
    "extract": ("ingest",),
    "embed": ("extract",),
    "cluster": ("embed",),
    "name": ("extract", "cluster"),
    "curate": ("name",),
    "tables": ("ingest", "curate"),
    "engagement": ("ingest", "curate"),
    "viz": ("ingest", "curate"),
    "quality": ("viz",),
    "stance_scan": ("ingest",),
    "stance_classify": ("stance_scan",),
    "stance_tables": ("stance_classify",),
}

# stages whose outputs are derived from the mutable merge map
_MERGE_MAP_READERS = {"tables", "engagement", "viz"}


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


class ProjectStore:
    """Plain-directory store: stages/<name>/<sig12>/ plus a manifest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.stages_dir = self.root / "stages"
        self._pre_commit_hook = None  # test seam for crash injection

    # -- manifest ---------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    def load_manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {"store_version": STORE_VERSION, "stages": {}}
        manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
        if manifest.get("store_version") != STORE_VERSION:
            raise CorruptStoreError(
                f"store version {manifest.get('store_version')} != {STORE_VERSION}"
            )
        return manifest

    def _commit_manifest(self, manifest: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )
        if self._pre_commit_hook is not None:
            self._pre_commit_hook()
        os.replace(tmp, self.manifest_path)

    # -- signatures -------------------------------------------------------

    def signature(
        self, stage: str, stage_configs: dict[str, dict], extra_inputs: dict[str, list[str]]
    ) -> str:
        """Recursive input signature of a stage under the current config."""
        if stage not in STAGE_DEPS:
            raise UsageError(f"unknown stage {stage!r}")
        upstream = [
            self.signature(dep, stage_configs, extra_inputs) for dep in STAGE_DEPS[stage]
        ]
        payload = _canonical_json(
            {
                "stage": stage,
                "config": stage_configs.get(stage, {}),
                "upstream": upstream,
                "extra": extra_inputs.get(stage, []),
            }
        )
        return sha256_bytes(payload.encode("utf-8"))

    def stage_entry(self, stage: str) -> dict | None:
        return self.load_manifest()["stages"].get(stage)

    def stage_dir(self, stage: str) -> Path:
        entry = self.stage_entry(stage)
        if entry is None:
            raise DependencyError(stage)
        return self.root / entry["dir"]

    def verify_stage_files(self, stage: str) -> None:
        entry = self.stage_entry(stage)
        if entry is None:
            raise DependencyError(stage)
        base = self.root / entry["dir"]
        for filename, digest in entry["files"].items():
            path = base / filename
            if not path.exists():
                raise CorruptStoreError(f"stage {stage}: missing output {filename}")
            actual = sha256_file(path)
            if actual != digest:
                raise CorruptStoreError(
                    f"stage {stage}: {filename} hash mismatch "
                    f"(manifest {digest[:12]}, actual {actual[:12]})"
                )

    def is_fresh(self, stage: str, signature: str) -> bool:
        entry = self.stage_entry(stage)
        return entry is not None and entry["signature"] == signature

    def stale_upstreams(
        self, stage: str, stage_configs: dict[str, dict], extra_inputs: dict[str, list[str]]
    ) -> list[str]:
        """Incomplete or out-of-date upstream stages, in topological order."""
        stale: list[str] = []
        seen: set[str] = set()

        def visit(name: str) -> None:
            if name in seen:
                return
            seen.add(name)
            for dep in STAGE_DEPS[name]:
                visit(dep)
            if name != stage and not self.is_fresh(
                name, self.signature(name, stage_configs, extra_inputs)
            ):
                stale.append(name)

        visit(stage)
        return stale

    # -- stage execution --------------------------------------------------

    def run_stage(
        self,
        stage: str,
        stage_configs: dict[str, dict],
        extra_inputs: dict[str, list[str]],
        producer,
    ) -> dict:
        """Execute one stage atomically, or short-circuit when fresh.

        `producer(out_dir: Path)` writes the stage's output files. Returns
        the manifest entry for the stage.
        """
        stale = self.stale_upstreams(stage, stage_configs, extra_inputs)
        if stale:
            raise DependencyError(stale[0])
        for dep in STAGE_DEPS[stage]:
            self.verify_stage_files(dep)

        signature = self.signature(stage, stage_configs, extra_inputs)
        if self.is_fresh(stage, signature):
            self.verify_stage_files(stage)
            return self.stage_entry(stage)

        rel_dir = Path("stages") / stage / signature[:12]
        final_dir = self.root / rel_dir
        tmp_dir = final_dir.with_name(f".tmp-{signature[:12]}")
        if tmp_dir.exists():
            shutil.rmtree(tmp_dir)
        tmp_dir.mkdir(parents=True)
        producer(tmp_dir)
        files = {
            p.name: sha256_file(p) for p in sorted(tmp_dir.iterdir()) if p.is_file()
        }
        if final_dir.exists():
            shutil.rmtree(final_dir)
        os.replace(tmp_dir, final_dir)

        manifest = self.load_manifest()
        manifest["stages"][stage] = {
            "signature": signature,
            "dir": str(rel_dir),
            "files": files,
            "config": stage_configs.get(stage, {}),
        }
        self._commit_manifest(manifest)
        return manifest["stages"][stage]

    def read_stage_file(self, stage: str, filename: str, verify: bool = True) -> bytes:
        entry = self.stage_entry(stage)
        if entry is None:
            raise DependencyError(stage)
        if filename not in entry["files"]:
            raise CorruptStoreError(f"stage {stage} has no output {filename}")
        path = self.root / entry["dir"] / filename
        data = path.read_bytes()
        if verify and sha256_bytes(data) != entry["files"][filename]:
            raise CorruptStoreError(f"stage {stage}: {filename} hash mismatch")
        return data

    # -- merge map (mutable curation document) ----------------------------

    @property
    def merge_map_path(self) -> Path:
        return self.root / MERGE_MAP_NAME

    def load_merge_map(self) -> MergeMap:
        if not self.merge_map_path.exists():
            raise DependencyError("curate")
        return MergeMap.load(self.merge_map_path)

    def save_merge_map(self, merge_map: MergeMap) -> None:
        tmp = self.merge_map_path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(merge_map.to_json(), ensure_ascii=False, indent=1) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, self.merge_map_path)

    def merge_map_hash(self) -> str:
        if not self.merge_map_path.exists():
            return "absent"
        return sha256_file(self.merge_map_path)

    def merge_map_reader_extra(self) -> dict[str, list[str]]:
        digest = self.merge_map_hash()
        return {stage: [digest] for stage in _MERGE_MAP_READERS}
