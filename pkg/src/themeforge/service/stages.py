"""Pipeline stage producers and the project configuration.

Each stage loads its upstream artifacts through the store (hash-verified)
and writes line-delimited or CSV outputs. Everything here is deterministic
given the config and backends, which is what makes two full runs of the
pipeline byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .. import clusters as clustering_mod
from ..analytics import (
    channel_theme_vector,
    engagement_ranking,
    local_all,
    news_group,
    political_group,
    quality_report,
    theme_frequency,
    tsne,
)
from ..corpus import (
    Corpus,
    FilterRules,
    Orientation,
    Period,
    SourceKind,
    apply_filters,
    ingest_corpus,
    write_channels,
    write_videos,
)
from ..errors import DependencyError, UsageError
from ..gateway import BackendDescriptor, BackendKind, GatewayConfig, embed_batch
from ..analytics.metrics import group_mean_ratio
from ..stance import (
    StanceRecord,
    classify_stance,
    load_targets,
    select_relevant_docs,
    stance_table,
    write_stance_table_csv,
)
from ..stance.classify import RecordOrigin, StanceLabel
from ..themes import (
    MergeMap,
    Theme,
    apply_merge,
    coherence_report,
    intra_theme_coherence,
    theme_medoid,
)
from ..topics import Topic, extract_corpus
from .store import ProjectStore, sha256_file

ORIENTATION_ORDER = (
    Orientation.LEFT,
    Orientation.CENTER,
    Orientation.RIGHT,
    Orientation.FAR_RIGHT,
    Orientation.UNLABELED,
)

PERIOD_CELLS: tuple[Period | None, ...] = (
    None,  # entire period
    Period.PRE_ELECTION,
    Period.EUROPEAN,
    Period.LEGISLATIVE,
)


@dataclass
class ProjectConfig:
    channels_path: str = ""
    videos_path: str = ""
    generation: dict = field(default_factory=lambda: {"kind": "MockGeneration", "seed": 1})
    embedding: dict = field(
        default_factory=lambda: {"kind": "MockEmbedding", "seed": 1, "mock_dim": 64}
    )
    filters: dict = field(default_factory=dict)
    k: int = 12
    seed: int = 7
    kmeans_max_iter: int = 300
    naming_budget: int = 200
    min_videos_viz: int = 20
    engagement_min_occurrence: int = 10
    engagement_metrics: list = field(
        default_factory=lambda: ["CommentPerView", "LikePerView"]
    )
    viz_perplexity: float = 5.0
    viz_iterations: int = 500
    viz_metric: str = "euclidean"
    viz_seed: int | None = None  # falls back to `seed`
    targets_path: str | None = None
    stance_threshold: float = 85.0
    quality_groups_path: str | None = None

    @staticmethod
    def load(path: str | Path) -> "ProjectConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        known = {f for f in ProjectConfig.__dataclass_fields__}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        return ProjectConfig(**raw)

    def filter_rules(self) -> FilterRules:
        return FilterRules(**self.filters)

    def generation_backend(self) -> BackendDescriptor:
        return _backend_from_dict(self.generation)

    def embedding_backend(self) -> BackendDescriptor:
        return _backend_from_dict(self.embedding)


def _backend_from_dict(raw: dict) -> BackendDescriptor:
    return BackendDescriptor(
        kind=BackendKind(raw["kind"]),
        model_name=raw.get("model_name", "mock"),
        endpoint=raw.get("endpoint"),
        seed=raw.get("seed"),
        mock_dim=raw.get("mock_dim", 64),
    )


def stage_configs(config: ProjectConfig) -> dict[str, dict]:
    """Per-stage config slices that feed the stage signatures."""
    return {
        "ingest": {"filters": dict(sorted(config.filters.items()))},
        "extract": {"generation": config.generation},
        "embed": {"embedding": config.embedding},
        "cluster": {
            "k": config.k,
            "seed": config.seed,
            "max_iter": config.kmeans_max_iter,
        },
        "name": {"generation": config.generation, "budget": config.naming_budget},
        "curate": {},
        "tables": {},
        "engagement": {
            "min_occurrence": config.engagement_min_occurrence,
            "metrics": list(config.engagement_metrics),
        },
        "viz": {
            "perplexity": config.viz_perplexity,
            "seed": config.viz_seed if config.viz_seed is not None else config.seed,
            "iterations": config.viz_iterations,
            "metric": config.viz_metric,
            "min_videos_viz": config.min_videos_viz,
        },
        "quality": {},
        "stance_scan": {"threshold": config.stance_threshold},
        "stance_classify": {"generation": config.generation},
        "stance_tables": {},
    }


def extra_inputs(store: ProjectStore, config: ProjectConfig) -> dict[str, list[str]]:
    """External file hashes feeding stage signatures."""
    extra: dict[str, list[str]] = dict(store.merge_map_reader_extra())
    extra["ingest"] = [
        sha256_file(Path(config.channels_path)),
        sha256_file(Path(config.videos_path)),
    ]
    if config.targets_path:
        extra["stance_scan"] = extra.get("stance_scan", []) + [
            sha256_file(Path(config.targets_path))
        ]
    if config.quality_groups_path:
        extra["quality"] = extra.get("quality", []) + [
            sha256_file(Path(config.quality_groups_path))
        ]
    return extra


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buffer.getvalue(), encoding="utf-8")


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(data: bytes) -> list[dict]:
    return [json.loads(line) for line in data.decode("utf-8").splitlines() if line.strip()]


# -- artifact loaders -------------------------------------------------------


def load_corpus(store: ProjectStore) -> Corpus:
    entry = store.stage_entry("ingest")
    if entry is None:
        raise DependencyError("ingest")
    store.verify_stage_files("ingest")
    base = store.root / entry["dir"]
    return ingest_corpus(base / "channels.jsonl", base / "videos.jsonl")


def load_topics(store: ProjectStore) -> list[Topic]:
    records = _read_jsonl(store.read_stage_file("extract", "topics.jsonl"))
    return [
        Topic(
            text=r["text"],
            doc_id=r["doc_id"],
            segment_index=r["segment_index"],
            quota_rank=r["quota_rank"],
        )
        for r in records
    ]


def load_embeddings(store: ProjectStore) -> dict[tuple[str, int, int], np.ndarray]:
    records = _read_jsonl(store.read_stage_file("embed", "embeddings.jsonl"))
    return {
        (r["doc_id"], r["segment_index"], r["quota_rank"]): np.asarray(
            r["vector"], dtype=np.float64
        )
        for r in records
    }


def load_clustering(store: ProjectStore) -> dict:
    return json.loads(store.read_stage_file("cluster", "clustering.json"))


def load_assignments(store: ProjectStore) -> dict[tuple[str, int, int], int]:
    raw = load_clustering(store)
    return {(d, s, r): int(c) for d, s, r, c in raw["assignments"]}


def load_cluster_names(store: ProjectStore) -> dict[int, str]:
    records = _read_jsonl(store.read_stage_file("name", "names.jsonl"))
    return {int(r["cluster_id"]): r["name"] for r in records}


def themes_state(
    store: ProjectStore,
) -> tuple[Corpus, MergeMap, list[Theme], dict[str, set[str]]]:
    """Corpus, merge map, derived themes, and the video -> themes mapping."""
    corpus = load_corpus(store)
    assignments = load_assignments(store)
    merge_map = store.load_merge_map()
    themes = apply_merge(assignments, merge_map)
    themes_by_video: dict[str, set[str]] = {}
    for (doc_id, _, _), cluster in assignments.items():
        themes_by_video.setdefault(doc_id, set()).add(merge_map.entries[cluster])
    return corpus, merge_map, themes, themes_by_video


def corpus_groups(corpus: Corpus):
    """The nonempty analysis groups, in canonical table order."""
    news_orients = {
        c.orientation for c in corpus.channels.values() if c.source_kind is SourceKind.NATIONAL_NEWS
    }
    political_orients = {
        c.orientation
        for c in corpus.channels.values()
        if c.source_kind in (SourceKind.POLITICIAN, SourceKind.PARTY)
    }
    has_local = any(
        c.source_kind is SourceKind.LOCAL_NEWS for c in corpus.channels.values()
    )
    groups = []
    for orientation in ORIENTATION_ORDER:
        if orientation in news_orients:
            groups.append(news_group(orientation))
    for orientation in ORIENTATION_ORDER:
        if orientation in political_orients:
            groups.append(political_group(orientation))
    if has_local:
        groups.append(local_all())
    return groups


# -- pipeline ---------------------------------------------------------------


class Pipeline:
    """Runs stages against a store under one effective config."""

    def __init__(
        self,
        store: ProjectStore,
        config: ProjectConfig,
        gateway_config: GatewayConfig | None = None,
    ):
        self.store = store
        self.config = config
        self.gateway = gateway_config or GatewayConfig()

    def _run(self, stage: str, producer) -> dict:
        return self.store.run_stage(
            stage,
            stage_configs(self.config),
            extra_inputs(self.store, self.config),
            producer,
        )

    def run(self, stage: str) -> dict:
        producers = {
            "ingest": self._produce_ingest,
            "extract": self._produce_extract,
            "embed": self._produce_embed,
            "cluster": self._produce_cluster,
            "name": self._produce_name,
            "curate": self._produce_curate,
            "tables": self._produce_tables,
            "engagement": self._produce_engagement,
            "viz": self._produce_viz,
            "quality": self._produce_quality,
            "stance_scan": self._produce_stance_scan,
            "stance_classify": self._produce_stance_classify,
            "stance_tables": self._produce_stance_tables,
        }
        if stage not in producers:
            raise UsageError(f"unknown stage {stage!r}")
        if stage == "curate":
            return self._run_curate()
        return self._run(stage, producers[stage])

    def run_all(self, stages: list[str]) -> None:
        for stage in stages:
            self.run(stage)

    # -- producers --------------------------------------------------------

    def _produce_ingest(self, out: Path) -> None:
        corpus = ingest_corpus(self.config.channels_path, self.config.videos_path)
        corpus = apply_filters(corpus, self.config.filter_rules())
        write_channels(
            sorted(corpus.channels.values(), key=lambda c: c.channel_id),
            out / "channels.jsonl",
        )
        write_videos(
            sorted(corpus.videos.values(), key=lambda v: v.video_id),
            out / "videos.jsonl",
        )

    def _produce_extract(self, out: Path) -> None:
        corpus = load_corpus(self.store)
        outcomes = extract_corpus(
            corpus, self.config.generation_backend(), self.gateway
        )
        topics = []
        skipped = []
        for outcome in outcomes:
            if outcome.skipped_reason:
                skipped.append({"doc_id": outcome.doc_id, "reason": outcome.skipped_reason})
            for topic in outcome.topics:
                topics.append(
                    {
                        "doc_id": topic.doc_id,
                        "segment_index": topic.segment_index,
                        "quota_rank": topic.quota_rank,
                        "text": topic.text,
                    }
                )
        _write_jsonl(out / "topics.jsonl", topics)
        _write_jsonl(out / "skipped.jsonl", skipped)

    def _produce_embed(self, out: Path) -> None:
        topics = sorted(load_topics(self.store), key=lambda t: t.key)
        records = []
        if topics:
            vectors = embed_batch(
                [t.text for t in topics], self.config.embedding_backend(), self.gateway
            )
            for topic, vector in zip(topics, vectors):
                records.append(
                    {
                        "doc_id": topic.doc_id,
                        "segment_index": topic.segment_index,
                        "quota_rank": topic.quota_rank,
                        "text": topic.text,
                        "vector": [float(x) for x in vector.values],
                    }
                )
        _write_jsonl(out / "embeddings.jsonl", records)

    def _produce_cluster(self, out: Path) -> None:
        embeddings = load_embeddings(self.store)
        keys = sorted(embeddings)
        matrix = np.stack([embeddings[k] for k in keys])
        result = clustering_mod.kmeans(
            matrix, k=self.config.k, seed=self.config.seed, max_iter=self.config.kmeans_max_iter
        )
        payload = {
            "k": result.k,
            "seed": result.seed,
            "inertia": result.inertia,
            "iterations_run": result.iterations_run,
            "assignments": [
                [doc, seg, rank, int(label)]
                for (doc, seg, rank), label in zip(keys, result.labels)
            ],
            "centroids": [[float(x) for x in row] for row in result.centroids],
        }
        (out / "clustering.json").write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def _produce_name(self, out: Path) -> None:
        topics = {t.key: t for t in load_topics(self.store)}
        assignments = load_assignments(self.store)
        members: dict[int, list[Topic]] = {}
        for key, cluster in assignments.items():
            members.setdefault(cluster, []).append(topics[key])
        records = []
        backend = self.config.generation_backend()
        for cluster_id in sorted(members):
            name = clustering_mod.name_cluster(
                sorted(members[cluster_id], key=lambda t: t.key),
                backend,
                self.gateway,
                budget=self.config.naming_budget,
                sample_seed=self.config.seed,
            )
            records.append({"cluster_id": cluster_id, "name": name, "source": "Model"})
        _write_jsonl(out / "names.jsonl", records)

    def _produce_curate(self, out: Path) -> None:
        entry = self.store.stage_entry("name")
        (out / "curate.json").write_text(
            json.dumps({"initialized_from": entry["signature"]}) + "\n",
            encoding="utf-8",
        )

    def _run_curate(self) -> dict:
        signature = self.store.signature(
            "curate", stage_configs(self.config), extra_inputs(self.store, self.config)
        )
        was_fresh = self.store.is_fresh("curate", signature)
        entry = self._run("curate", self._produce_curate)
        if not was_fresh or not self.store.merge_map_path.exists():
            assignments = load_assignments(self.store)
            names = load_cluster_names(self.store)
            cluster_ids = sorted(set(assignments.values()))
            self.store.save_merge_map(MergeMap.identity(cluster_ids, names))
        return entry

    def _produce_tables(self, out: Path) -> None:
        corpus, merge_map, themes, themes_by_video = themes_state(self.store)
        embeddings = load_embeddings(self.store)
        assignments = load_assignments(self.store)
        names = load_cluster_names(self.store)

        rows = []
        for group in corpus_groups(corpus):
            for period in PERIOD_CELLS:
                for row in theme_frequency(
                    corpus, themes_by_video, group, period, merge_map.theme_names
                ):
                    rows.append(
                        [
                            row.group,
                            row.period,
                            row.theme_id,
                            merge_map.theme_names[row.theme_id],
                            row.occurrences,
                            row.percent,
                        ]
                    )
        _write_csv(
            out / "frequency.csv",
            ["group", "period", "theme", "theme_name", "occ", "percent"],
            rows,
        )

        theme_rows = []
        for theme in themes:
            coherence = intra_theme_coherence(theme, embeddings)
            theme_rows.append(
                [
                    theme.theme_id,
                    theme.name,
                    len(theme.member_clusters),
                    len(theme.member_topics),
                    coherence,
                ]
            )
        _write_csv(
            out / "themes_summary.csv",
            ["theme_id", "name", "n_clusters", "n_topics", "coherence"],
            theme_rows,
        )

        cluster_rows = []
        for cluster_id in sorted(set(assignments.values())):
            keys = sorted(k for k, c in assignments.items() if c == cluster_id)
            pseudo = Theme(
                theme_id=f"c{cluster_id}",
                name=names.get(cluster_id, f"Cluster {cluster_id}"),
                member_clusters=frozenset({cluster_id}),
                member_topics=tuple(keys),
            )
            cluster_rows.append(
                [
                    cluster_id,
                    names.get(cluster_id, f"Cluster {cluster_id}"),
                    merge_map.entries[cluster_id],
                    len(keys),
                    intra_theme_coherence(pseudo, embeddings),
                ]
            )
        _write_csv(
            out / "clusters_summary.csv",
            ["cluster_id", "name", "theme_id", "size", "coherence"],
            cluster_rows,
        )

        # both defensible readings of the corpus-wide coherence average,
        # plus pairwise medoid similarities for distinctiveness review
        report = coherence_report(themes, embeddings)
        _write_csv(
            out / "coherence_summary.csv",
            ["statistic", "value"],
            [
                ["intra_theme_mean_unweighted", report["mean_unweighted"]],
                ["intra_theme_mean_size_weighted", report["mean_size_weighted"]],
            ],
        )
        medoid_vectors = {
            theme.theme_id: embeddings[theme_medoid(theme, embeddings)]
            for theme in themes
        }
        similarity_rows = []
        for i, theme_a in enumerate(themes):
            for theme_b in themes[i + 1 :]:
                cosine = float(
                    medoid_vectors[theme_a.theme_id] @ medoid_vectors[theme_b.theme_id]
                )
                similarity_rows.append([theme_a.theme_id, theme_b.theme_id, cosine])
        _write_csv(
            out / "theme_similarity.csv",
            ["theme_a", "theme_b", "medoid_cosine"],
            similarity_rows,
        )

    def _produce_engagement(self, out: Path) -> None:
        corpus, _, _, themes_by_video = themes_state(self.store)
        rows = []
        group_rows = []
        for group in corpus_groups(corpus):
            for metric in self.config.engagement_metrics:
                ranking = engagement_ranking(
                    corpus,
                    themes_by_video,
                    group,
                    metric,
                    min_occurrence=self.config.engagement_min_occurrence,
                )
                for row in ranking:
                    rows.append(
                        [row.group, row.metric, row.theme_id, row.mean_ratio, row.occurrences]
                    )
                mean = group_mean_ratio(corpus, group, metric)
                if mean is not None:
                    group_rows.append([group.label, metric, "per_video_mean", mean])
        _write_csv(
            out / "engagement.csv",
            ["group", "metric", "theme", "mean_ratio", "occ"],
            rows,
        )
        _write_csv(
            out / "group_means.csv",
            ["group", "metric", "statistic", "value"],
            group_rows,
        )

    def _channel_vectors(self) -> tuple[list[str], dict[str, np.ndarray]]:
        corpus, _, themes, themes_by_video = themes_state(self.store)
        theme_ids = sorted(t.theme_id for t in themes)
        vectors: dict[str, np.ndarray] = {}
        for channel_id in sorted(corpus.channels):
            ctv = channel_theme_vector(
                sorted(corpus.channel_videos(channel_id), key=lambda v: v.video_id),
                themes_by_video,
                theme_ids,
                min_videos_viz=self.config.min_videos_viz,
            )
            if ctv is not None:
                vectors[channel_id] = ctv.probabilities
        return theme_ids, vectors

    def _produce_viz(self, out: Path) -> None:
        corpus = load_corpus(self.store)
        theme_ids, vectors = self._channel_vectors()
        channel_ids = sorted(vectors)

        vector_rows = []
        for channel_id in channel_ids:
            for theme_id, probability in zip(theme_ids, vectors[channel_id]):
                if probability > 0:
                    vector_rows.append([channel_id, theme_id, float(probability)])
        _write_csv(
            out / "channel_vectors.csv",
            ["channel_id", "theme", "probability"],
            vector_rows,
        )

        matrix = np.stack([vectors[c] for c in channel_ids])
        viz_seed = self.config.viz_seed if self.config.viz_seed is not None else self.config.seed
        result = tsne(
            matrix,
            perplexity=self.config.viz_perplexity,
            seed=viz_seed,
            iterations=self.config.viz_iterations,
            metric=self.config.viz_metric,
        )
        layout_rows = [
            [
                channel_id,
                float(result.embedding[i, 0]),
                float(result.embedding[i, 1]),
                corpus.channels[channel_id].orientation.value,
            ]
            for i, channel_id in enumerate(channel_ids)
        ]
        _write_csv(out / "layout.csv", ["channel_id", "x", "y", "orientation"], layout_rows)

    def _produce_quality(self, out: Path) -> None:
        if not self.config.quality_groups_path:
            raise UsageError("quality stage requires quality_groups_path in config")
        groups = json.loads(Path(self.config.quality_groups_path).read_text(encoding="utf-8"))
        records = _read_jsonl_csv_vectors(
            self.store.read_stage_file("viz", "channel_vectors.csv")
        )
        report = quality_report(records, groups)
        _write_csv(out / "quality.csv", ["group", "q_c"], [[g, q] for g, q in report])

    def _produce_stance_scan(self, out: Path) -> None:
        if not self.config.targets_path:
            raise UsageError("stance stages require targets_path in config")
        corpus = load_corpus(self.store)
        targets = load_targets(
            json.loads(Path(self.config.targets_path).read_text(encoding="utf-8"))
        )
        relevance = {}
        for target in sorted(targets, key=lambda t: t.target_id):
            result = select_relevant_docs(corpus, target, self.config.stance_threshold)
            relevance[target.target_id] = {
                "count": result.count,
                "excluded": result.excluded,
                "doc_ids": list(result.doc_ids),
            }
        (out / "relevance.json").write_text(
            json.dumps(relevance, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )

    def _produce_stance_classify(self, out: Path) -> None:
        if not self.config.targets_path:
            raise UsageError("stance stages require targets_path in config")
        corpus = load_corpus(self.store)
        targets = {
            t.target_id: t
            for t in load_targets(
                json.loads(Path(self.config.targets_path).read_text(encoding="utf-8"))
            )
        }
        relevance = json.loads(self.store.read_stage_file("stance_scan", "relevance.json"))
        backend = self.config.generation_backend()
        records = []
        for target_id in sorted(relevance):
            info = relevance[target_id]
            if info["excluded"]:
                continue
            for doc_id in info["doc_ids"]:
                record = classify_stance(
                    corpus.videos[doc_id], targets[target_id], backend, self.gateway
                )
                records.append(
                    {
                        "doc_id": record.doc_id,
                        "target_id": record.target_id,
                        "label": record.label.value,
                    }
                )
        _write_jsonl(out / "stance.jsonl", records)

    def _produce_stance_tables(self, out: Path) -> None:
        corpus = load_corpus(self.store)
        records = [
            StanceRecord(
                doc_id=r["doc_id"],
                target_id=r["target_id"],
                label=StanceLabel(r["label"]),
                origin=RecordOrigin.PREDICTED,
            )
            for r in _read_jsonl(self.store.read_stage_file("stance_classify", "stance.jsonl"))
        ]
        for group_by, filename in (
            ("MediaOrientation", "stance_by_orientation.csv"),
            ("Target", "stance_by_target.csv"),
            ("OrientationByTarget", "stance_by_orientation_target.csv"),
        ):
            rows = stance_table(records, corpus, group_by)
            write_stance_table_csv(rows, group_by, out / filename)


def _read_jsonl_csv_vectors(data: bytes) -> dict[str, np.ndarray]:
    """Rebuild channel probability vectors from the long-format CSV."""
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    sparse: dict[str, dict[str, float]] = {}
    theme_ids: set[str] = set()
    for row in reader:
        sparse.setdefault(row["channel_id"], {})[row["theme"]] = float(row["probability"])
        theme_ids.add(row["theme"])
    ordered = sorted(theme_ids)
    return {
        channel: np.array([entries.get(t, 0.0) for t in ordered])
        for channel, entries in sparse.items()
    }
