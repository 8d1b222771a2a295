"""Build a small pipeline store + export bundle for frontend integration tests.

Usage: python3 scripts/make_fixture_store.py <out_dir>
"""

import pathlib
import shutil
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from fixture_corpus import ALL_STAGES, build_fixture  # noqa: E402

from themeforge.service import Pipeline, ProjectConfig, ProjectStore, export_report  # noqa: E402


def main() -> None:
    out = pathlib.Path(sys.argv[1]).resolve()
    if out.exists():
        shutil.rmtree(out)
    fixture = build_fixture(out / "fx", n_docs=60, k=6, min_videos_viz=4)
    config = ProjectConfig.load(fixture / "config.yaml")
    pipeline = Pipeline(ProjectStore(out / "store"), config)
    for stage in ALL_STAGES:
        pipeline.run(stage)
    # persist the config like `forge ingest` would, so later CLI calls work
    shutil.copyfile(fixture / "config.yaml", out / "store" / "config.yaml")
    export_report(pipeline.store, out / "bundle")
    print(out)


if __name__ == "__main__":
    main()
