"""Cluster-quality ratio: intra-group over cross-group mean cosine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateSeparationError, UsageError

_DEGENERATE_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class QualityInput:
    vectors: np.ndarray  # (n, d)
    labels: tuple[str, ...]  # cluster label per row
    cluster: str  # the cluster under evaluation

    def __post_init__(self):
        if len(self.labels) != self.vectors.shape[0]:
            raise UsageError("one label per vector required")


def _cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise UsageError("cosine undefined for zero vectors")
    unit = vectors / norms
    cos = unit @ unit.T
    cos = (cos + cos.T) / 2.0  # exact symmetry despite BLAS rounding
    np.fill_diagonal(cos, 1.0)  # self-cosine is 1 by definition
    return cos


def cluster_quality(inp: QualityInput) -> float:
    """Mean within-cluster cosine over mean cluster-to-outside cosine.

    Self-pairs are excluded from the numerator. A vanishing denominator
    (the outside world is orthogonal to the cluster) is reported as an
    error rather than an unbounded score.
    """
    vectors = np.asarray(inp.vectors, dtype=np.float64)
    inside = np.array([label == inp.cluster for label in inp.labels])
    n_in = int(inside.sum())
    n_out = int((~inside).sum())
    if n_in < 2:
        raise UsageError(f"cluster {inp.cluster!r} needs >= 2 members, has {n_in}")
    if n_out < 1:
        raise UsageError("at least one item outside the cluster is required")

    cos = _cosine_matrix(vectors)
    intra = cos[np.ix_(inside, inside)]
    off_diagonal = intra[~np.eye(n_in, dtype=bool)]
    numerator = off_diagonal.sum() / (n_in * (n_in - 1))
    denominator = cos[np.ix_(inside, ~inside)].mean()
    if denominator <= _DEGENERATE_DENOMINATOR:
        raise DegenerateSeparationError(
            f"cross-cluster mean cosine {denominator:.3e} is degenerate"
        )
    return float(numerator / denominator)


def quality_report(
    channel_vectors: dict[str, np.ndarray], labeled_groups: dict[str, list[str]]
) -> list[tuple[str, float]]:
    """One quality score per declared channel group.

    Groups must have at least two members; channels not named by any group
    still count as "outside" for every group's denominator.
    """
    grouped: dict[str, str] = {}
    for group, members in labeled_groups.items():
        for channel_id in members:
            if channel_id not in channel_vectors:
                raise UsageError(f"group {group}: unknown channel {channel_id}")
            grouped[channel_id] = group

    channel_ids = sorted(channel_vectors)
    vectors = np.stack([channel_vectors[c] for c in channel_ids])
    labels = tuple(grouped.get(c, "") for c in channel_ids)
    results = []
    for group in sorted(labeled_groups):
        score = cluster_quality(QualityInput(vectors=vectors, labels=labels, cluster=group))
        results.append((group, score))
    return results
