"""Spherical k-means over unit-norm embeddings, diagnostics, and naming.

All geometry is cosine-based: assignment by maximal cosine, centroids as
renormalized member means, inertia as summed (1 - cos). Runs are fully
determined by (vectors, k, seed).
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, ParseError, UsageError
from .gateway import (
    BackendDescriptor,
    DEFAULT_CONFIG,
    GatewayConfig,
    GenerationRequest,
    generate,
)
from .topics import Topic

logger = logging.getLogger(__name__)

NAMING_MEMBER_BUDGET = 200


@dataclass(frozen=True)
class KMeansResult:
    k: int
    labels: np.ndarray  # (n,) int cluster ids
    centroids: np.ndarray  # (k, d) unit rows
    inertia: float
    seed: int
    iterations_run: int
    inertia_history: tuple[float, ...] = ()  # one value per iteration

    def cluster_sizes(self) -> dict[int, int]:
        ids, counts = np.unique(self.labels, return_counts=True)
        sizes = {int(c): 0 for c in range(self.k)}
        sizes.update({int(i): int(n) for i, n in zip(ids, counts)})
        return sizes


@dataclass(frozen=True)
class ClusterName:
    cluster_id: int
    name: str
    source: str  # "Model" | "Human"

    def __post_init__(self):
        if not self.name:
            raise UsageError("cluster name must be nonempty")
        if self.source not in ("Model", "Human"):
            raise UsageError(f"bad name source {self.source!r}")


def _as_unit_matrix(vectors) -> np.ndarray:
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise UsageError("vectors must form an (n, d) matrix")
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise UsageError("vectors must be unit-norm")
    return matrix


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return matrix / norms


def _plusplus_init(matrix: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding with squared chord distance 2(1 - cos)."""
    n = matrix.shape[0]
    centers = np.empty((k, matrix.shape[1]))
    first = int(rng.integers(n))
    centers[0] = matrix[first]
    closest = 2.0 * (1.0 - matrix @ centers[0])
    for j in range(1, k):
        weights = np.clip(closest, 0.0, None)
        total = weights.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=weights / total))
        centers[j] = matrix[idx]
        closest = np.minimum(closest, 2.0 * (1.0 - matrix @ centers[j]))
    return centers


def _inertia(matrix: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    cos = np.einsum("ij,ij->i", matrix, centroids[labels])
    return float(np.sum(1.0 - cos))


def kmeans(vectors, k: int, seed: int, max_iter: int = 300) -> KMeansResult:
    """Spherical k-means with k-means++ initialization.

    Stops when no assignment changes or after `max_iter` iterations. Empty
    clusters are repaired by stealing the point farthest from its current
    centroid. Ties in assignment go to the lowest cluster id.
    """
    matrix = _as_unit_matrix(vectors)
    n = matrix.shape[0]
    if k < 1:
        raise UsageError("k must be >= 1")
    distinct = np.unique(matrix, axis=0).shape[0]
    if k > distinct:
        raise InfeasibleError(f"k={k} exceeds {distinct} distinct vectors")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(matrix, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    previous_inertia = np.inf
    history: list[float] = []
    iterations = 0

    for iterations in range(1, max_iter + 1):
        sims = matrix @ centroids.T  # argmax picks the lowest id on ties
        new_labels = np.argmax(sims, axis=1)

        present = set(np.unique(new_labels).tolist())
        for empty in (c for c in range(k) if c not in present):
            sizes = np.bincount(new_labels, minlength=k)
            member_cos = sims[np.arange(n), new_labels]
            candidates = np.flatnonzero(sizes[new_labels] > 1)
            farthest = candidates[np.argmin(member_cos[candidates])]
            new_labels[farthest] = empty
            present.add(empty)

        converged = np.array_equal(new_labels, labels)
        labels = new_labels
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, matrix)
        centroids = _normalize_rows(sums)
        current = _inertia(matrix, centroids, labels)
        if __debug__ and current > previous_inertia + 1e-9:
            raise AssertionError(
                f"inertia increased: {previous_inertia} -> {current} at iter {iterations}"
            )
        previous_inertia = current
        history.append(current)
        if converged:
            break

    return KMeansResult(
        k=k,
        labels=labels,
        centroids=centroids,
        inertia=previous_inertia,
        seed=seed,
        iterations_run=iterations,
        inertia_history=tuple(history),
    )


def elbow_curve(vectors, k_values: list[int], seed: int) -> list[tuple[int, float]]:
    """Converged inertia per candidate k, all runs sharing one seed."""
    return [(k, kmeans(vectors, k, seed).inertia) for k in k_values]


def silhouette(vectors, clustering: KMeansResult) -> float:
    """Mean silhouette with distance d = 1 - cosine; 0/0 counts as 0."""
    if clustering.k < 2:
        raise UsageError("silhouette is undefined for k=1")
    matrix = _as_unit_matrix(vectors)
    n = matrix.shape[0]
    labels = clustering.labels
    dist = 1.0 - matrix @ matrix.T
    scores = np.zeros(n)
    sizes = clustering.cluster_sizes()
    for i in range(n):
        own = labels[i]
        own_size = sizes[int(own)]
        if own_size <= 1:
            scores[i] = 0.0
            continue
        same = labels == own
        a = dist[i, same].sum() / (own_size - 1)  # excludes self (distance 0)
        b = np.inf
        for other in range(clustering.k):
            if other == own or sizes[other] == 0:
                continue
            b = min(b, dist[i, labels == other].mean())
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


@dataclass(frozen=True)
class ReviewSet:
    largest: tuple[int, ...]
    smallest: tuple[int, ...]

    @property
    def combined(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.largest) | set(self.smallest)))


def review_sample(clustering: KMeansResult, count: int = 30) -> ReviewSet:
    """Ids of the `count` largest and `count` smallest clusters.

    Ties break toward the lower cluster id; with k <= 2*count the combined
    set is simply all clusters.
    """
    sizes = clustering.cluster_sizes()
    by_size_desc = sorted(sizes, key=lambda c: (-sizes[c], c))
    by_size_asc = sorted(sizes, key=lambda c: (sizes[c], c))
    return ReviewSet(
        largest=tuple(by_size_desc[:count]),
        smallest=tuple(by_size_asc[:count]),
    )


def _naming_sample(topics: list[Topic], budget: int, seed: int) -> list[Topic]:
    if len(topics) <= budget:
        return list(topics)
    keyed = sorted(
        topics,
        key=lambda t: hashlib.blake2b(
            f"{seed}:{t.doc_id}:{t.segment_index}:{t.quota_rank}".encode(),
            digest_size=8,
        ).digest(),
    )
    return sorted(keyed[:budget], key=lambda t: t.key)


def build_naming_prompt(member_texts: list[str]) -> str:
    listing = "\n".join(f"- {text}" for text in member_texts)
    return (
        "You are given the topics of one cluster. Respond with a single short name "
        "that reflects the dominant theme of the cluster. Answer with the name only.\n"
        "\n"
        f"{listing}"
    )


def name_cluster(
    member_topics: list[Topic],
    backend: BackendDescriptor,
    config: GatewayConfig = DEFAULT_CONFIG,
    budget: int = NAMING_MEMBER_BUDGET,
    sample_seed: int = 0,
) -> str:
    """Ask the generation backend for a representative cluster name.

    Oversized clusters are represented by a deterministic sample of
    `budget` members so the prompt stays bounded. Over-length names are
    kept verbatim; they are display labels, not topics.
    """
    if not member_topics:
        raise UsageError("cannot name an empty cluster")
    sample = _naming_sample(member_topics, budget, sample_seed)
    prompt = build_naming_prompt([t.text for t in sample])
    completion = generate(GenerationRequest(prompt=prompt), backend, config)
    for line in completion.splitlines():
        line = line.strip().strip(".")
        if line:
            return line
    raise ParseError("naming completion contained no usable line", raw=completion)
