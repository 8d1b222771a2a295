"""Curated cluster-to-theme merging, coherence metrics, validation export.

The merge map is the persistent curation document: a total cluster->theme
mapping plus an append-only action history whose replay reproduces the
current state. Coherence anchors on theme medoids, matching how every other
similarity in the pipeline is computed (cosine over unit vectors).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, SourceKind
from .errors import ConflictError, UsageError
from .topics import Topic

TopicKey = tuple[str, int, int]


@dataclass(frozen=True)
class Theme:
    theme_id: str
    name: str
    member_clusters: frozenset[int]
    member_topics: tuple[TopicKey, ...]

    def __post_init__(self):
        if not self.member_clusters:
            raise UsageError(f"theme {self.theme_id} has no clusters")


@dataclass
class MergeMap:
    """Versioned cluster->theme mapping with full action history."""

    entries: dict[int, str]
    theme_names: dict[str, str]
    history: list[dict] = field(default_factory=list)
    version: int = 0

    @staticmethod
    def identity(cluster_ids: list[int], names: dict[int, str] | None = None) -> "MergeMap":
        names = names or {}
        entries = {c: f"t{c}" for c in cluster_ids}
        theme_names = {
            f"t{c}": names.get(c, f"Cluster {c}") for c in cluster_ids
        }
        return MergeMap(entries=entries, theme_names=theme_names)

    def validate_total(self, cluster_ids: list[int]) -> None:
        missing = sorted(set(cluster_ids) - set(self.entries))
        if missing:
            raise UsageError(f"merge map missing clusters {missing}")
        unnamed = sorted(set(self.entries.values()) - set(self.theme_names))
        if unnamed:
            raise UsageError(f"merge map has unnamed themes {unnamed}")

    def _prune_names(self) -> None:
        live = set(self.entries.values())
        for theme_id in [t for t in self.theme_names if t not in live]:
            del self.theme_names[theme_id]

    def apply_action(
        self, kind: str, payload: dict, actor: str, base_version: int, timestamp: str = ""
    ) -> None:
        """Apply one audited mutation under optimistic versioning."""
        if base_version != self.version:
            raise ConflictError(
                f"stale base_version {base_version}, current is {self.version}",
                current_version=self.version,
            )
        self._apply(kind, payload)
        self.version += 1
        self.history.append(
            {
                "kind": kind,
                "payload": payload,
                "actor": actor,
                "timestamp": timestamp,
                "version": self.version,
            }
        )

    def _apply(self, kind: str, payload: dict) -> None:
        if kind == "merge":
            cluster_ids = [int(c) for c in payload["cluster_ids"]]
            name = payload["theme_name"]
            if len(cluster_ids) < 2:
                raise UsageError("merge requires at least two clusters")
            if not name:
                raise UsageError("merge requires a theme name")
            unknown = sorted(set(cluster_ids) - set(self.entries))
            if unknown:
                raise UsageError(f"merge references unknown clusters {unknown}")
            target = self.entries[min(cluster_ids)]
            for cid in cluster_ids:
                self.entries[cid] = target
            self.theme_names[target] = name
            self._prune_names()
        elif kind == "rename":
            theme_id = payload["theme_id"]
            name = payload["name"]
            if theme_id not in self.theme_names:
                raise UsageError(f"unknown theme {theme_id}")
            if not name:
                raise UsageError("rename requires a nonempty name")
            self.theme_names[theme_id] = name
        elif kind == "split":
            cluster_id = int(payload["cluster_id"])
            theme_id = payload["theme_id"]
            if cluster_id not in self.entries:
                raise UsageError(f"unknown cluster {cluster_id}")
            if theme_id not in self.theme_names:
                name = payload.get("theme_name")
                if not name:
                    raise UsageError(f"unknown theme {theme_id} and no theme_name given")
                self.theme_names[theme_id] = name
            self.entries[cluster_id] = theme_id
            self._prune_names()
        else:
            raise UsageError(f"unknown action kind {kind!r}")

    def replay(self, cluster_ids: list[int], names: dict[int, str] | None = None) -> "MergeMap":
        """Fold the history from the identity map; must reproduce self."""
        rebuilt = MergeMap.identity(cluster_ids, names)
        for action in self.history:
            rebuilt.apply_action(
                action["kind"],
                action["payload"],
                action["actor"],
                base_version=rebuilt.version,
                timestamp=action["timestamp"],
            )
        return rebuilt

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "entries": {str(c): t for c, t in sorted(self.entries.items())},
            "theme_names": dict(sorted(self.theme_names.items())),
            "history": self.history,
        }

    @staticmethod
    def from_json(raw: dict) -> "MergeMap":
        return MergeMap(
            entries={int(c): t for c, t in raw["entries"].items()},
            theme_names=dict(raw["theme_names"]),
            history=list(raw["history"]),
            version=int(raw["version"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), ensure_ascii=False, indent=1) + "\n",
            encoding="utf-8",
        )

    @staticmethod
    def load(path: str | Path) -> "MergeMap":
        return MergeMap.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def apply_merge(
    assignments: dict[TopicKey, int], merge_map: MergeMap
) -> list[Theme]:
    """Group clusters into themes per the merge map.

    `assignments` maps topic keys to cluster ids. The merge map must be
    total over the clusters present.
    """
    cluster_ids = sorted(set(assignments.values()))
    merge_map.validate_total(cluster_ids)
    clusters_by_theme: dict[str, set[int]] = {}
    for cid in cluster_ids:
        clusters_by_theme.setdefault(merge_map.entries[cid], set()).add(cid)
    topics_by_cluster: dict[int, list[TopicKey]] = {}
    for key, cid in assignments.items():
        topics_by_cluster.setdefault(cid, []).append(key)
    themes = []
    for theme_id in sorted(clusters_by_theme):
        clusters = clusters_by_theme[theme_id]
        members = sorted(
            key for cid in clusters for key in topics_by_cluster.get(cid, [])
        )
        themes.append(
            Theme(
                theme_id=theme_id,
                name=merge_map.theme_names[theme_id],
                member_clusters=frozenset(clusters),
                member_topics=tuple(members),
            )
        )
    return themes


def assign_video_themes(
    doc_id: str,
    topics: list[Topic],
    assignments: dict[TopicKey, int],
    merge_map: MergeMap,
) -> set[str]:
    """Themes of one video: its topics' clusters mapped through the merge map."""
    theme_ids: set[str] = set()
    for topic in topics:
        if topic.doc_id != doc_id:
            continue
        if topic.key not in assignments:
            raise UsageError(f"topic {topic.key} has no cluster assignment")
        cluster = assignments[topic.key]
        if cluster not in merge_map.entries:
            raise UsageError(f"cluster {cluster} missing from merge map")
        theme_ids.add(merge_map.entries[cluster])
    return theme_ids


def _member_matrix(
    theme: Theme, embeddings: dict[TopicKey, np.ndarray]
) -> tuple[list[TopicKey], np.ndarray]:
    if not theme.member_topics:
        raise UsageError(f"theme {theme.theme_id} has no member topics")
    keys = list(theme.member_topics)
    try:
        matrix = np.stack([embeddings[k] for k in keys])
    except KeyError as exc:
        raise UsageError(f"missing embedding for topic {exc.args[0]}") from exc
    return keys, matrix


_MEDOID_TIE_TOL = 1e-12


def theme_medoid(theme: Theme, embeddings: dict[TopicKey, np.ndarray]) -> TopicKey:
    """Member maximizing mean cosine to all members (self included).

    Ties resolve to the lexicographically smallest topic key; scores within
    1e-12 count as tied so float noise cannot flip the choice.
    """
    keys, matrix = _member_matrix(theme, embeddings)
    gram = matrix @ matrix.T
    gram = (gram + gram.T) / 2.0  # BLAS output is not exactly symmetric
    mean_cos = gram.mean(axis=1)
    best_score = mean_cos.max()
    tied = [keys[i] for i in range(len(keys)) if mean_cos[i] >= best_score - _MEDOID_TIE_TOL]
    return min(tied)


def intra_theme_coherence(theme: Theme, embeddings: dict[TopicKey, np.ndarray]) -> float:
    """Mean cosine of every member to the theme medoid (self included)."""
    keys, matrix = _member_matrix(theme, embeddings)
    medoid = theme_medoid(theme, embeddings)
    medoid_vec = matrix[keys.index(medoid)]
    return float((matrix @ medoid_vec).mean())


def inter_theme_similarity(
    theme_a: Theme, theme_b: Theme, embeddings: dict[TopicKey, np.ndarray]
) -> float:
    """Cosine between the two theme medoids."""
    if theme_a.theme_id == theme_b.theme_id:
        raise UsageError("inter-theme similarity needs two distinct themes")
    _, matrix_a = _member_matrix(theme_a, embeddings)
    _, matrix_b = _member_matrix(theme_b, embeddings)
    med_a = matrix_a[list(theme_a.member_topics).index(theme_medoid(theme_a, embeddings))]
    med_b = matrix_b[list(theme_b.member_topics).index(theme_medoid(theme_b, embeddings))]
    return float(med_a @ med_b)


def coherence_report(
    themes: list[Theme], embeddings: dict[TopicKey, np.ndarray]
) -> dict:
    """Per-theme coherence plus both aggregate weightings.

    Reports the equal-weight mean over themes and the size-weighted mean
    (every topic counted once), since either reading of "average" is
    defensible.
    """
    per_theme = {t.theme_id: intra_theme_coherence(t, embeddings) for t in themes}
    sizes = {t.theme_id: len(t.member_topics) for t in themes}
    values = np.array([per_theme[t.theme_id] for t in themes])
    weights = np.array([sizes[t.theme_id] for t in themes], dtype=np.float64)
    return {
        "per_theme": per_theme,
        "mean_unweighted": float(values.mean()),
        "mean_size_weighted": float((values * weights).sum() / weights.sum()),
    }


@dataclass(frozen=True)
class ValidationItem:
    doc_id: str
    assigned_themes: tuple[str, ...]
    q1_accurate: bool | None = None
    q2_complete: bool | None = None
    annotator: str = ""


_DATASET_OF_KIND = {
    SourceKind.NATIONAL_NEWS: "news",
    SourceKind.LOCAL_NEWS: "local",
    SourceKind.POLITICIAN: "political",
    SourceKind.PARTY: "political",
}


def dataset_of(kind: SourceKind) -> str:
    return _DATASET_OF_KIND[kind]


def export_validation_sample(
    corpus: Corpus,
    themes_by_video: dict[str, set[str]],
    n_per_dataset: dict[str, int],
    max_words: int = 1000,
    seed: int = 0,
) -> list[ValidationItem]:
    """Seeded uniform sample of short docs for the two-question review.

    Only docs with a transcript of at most `max_words` words are eligible.
    Items come back with empty answers, ready for annotation.
    """
    rng = np.random.default_rng(seed)
    items: list[ValidationItem] = []
    for dataset in sorted(n_per_dataset):
        requested = n_per_dataset[dataset]
        eligible = sorted(
            v.video_id
            for v in corpus.videos.values()
            if v.has_transcript
            and v.word_count <= max_words
            and dataset_of(corpus.channels[v.channel_id].source_kind) == dataset
        )
        if requested > len(eligible):
            raise UsageError(
                f"dataset {dataset}: requested {requested} docs, only {len(eligible)} eligible"
            )
        chosen = rng.choice(len(eligible), size=requested, replace=False)
        for idx in sorted(int(i) for i in chosen):
            doc_id = eligible[idx]
            items.append(
                ValidationItem(
                    doc_id=doc_id,
                    assigned_themes=tuple(sorted(themes_by_video.get(doc_id, set()))),
                )
            )
    return items


def write_validation_csv(items: list[ValidationItem], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["doc_id", "themes", "q1", "q2", "annotator"])
        for item in items:
            writer.writerow(
                [
                    item.doc_id,
                    ";".join(item.assigned_themes),
                    "" if item.q1_accurate is None else str(item.q1_accurate).lower(),
                    "" if item.q2_complete is None else str(item.q2_complete).lower(),
                    item.annotator,
                ]
            )
