"""Exact t-SNE: affinity search, optimization, and layout quality."""

from __future__ import annotations

import numpy as np
import pytest

from themeforge.analytics import binary_search_affinities, trustworthiness, tsne
from themeforge.analytics.tsne import LOG_PERPLEXITY_TOL, pairwise_sq_euclidean
from themeforge.errors import UsageError

from oracles import trustworthiness_oracle


def two_channel_groups(rng, per_group: int = 10) -> np.ndarray:
    """Channel-style probability vectors with disjoint theme support."""
    vectors = []
    for group in range(2):
        for _ in range(per_group):
            v = np.zeros(12)
            v[6 * group : 6 * group + 6] = rng.random(6) + 0.1
            vectors.append(v / v.sum())
    return np.array(vectors)


def test_output_shape(rng):
    points = rng.random((3, 4))
    result = tsne(points, perplexity=2.0, seed=0, iterations=50)
    assert result.embedding.shape == (3, 2)


def test_parameter_guards(rng):
    points = rng.random((20, 4))
    with pytest.raises(UsageError):
        tsne(points, perplexity=50.0, seed=0)
    with pytest.raises(UsageError):
        tsne(points[:2], perplexity=1.0, seed=0)
    with pytest.raises(UsageError):
        tsne(points, perplexity=0.5, seed=0)


def test_conditional_rows_sum_to_one(rng):
    points = rng.random((15, 6))
    distances = pairwise_sq_euclidean(points)
    P, betas = binary_search_affinities(distances, perplexity=5.0)
    sums = P.sum(axis=1)
    assert np.all(np.abs(sums - 1.0) <= 1e-9)
    assert np.all(np.diag(P) == 0.0)
    assert np.all(betas > 0)


def test_perplexity_matches_target_in_log_space(rng):
    points = rng.random((20, 5))
    distances = pairwise_sq_euclidean(points)
    target = 6.0
    P, _ = binary_search_affinities(distances, perplexity=target)
    for i in range(20):
        row = P[i][P[i] > 0]
        entropy = -np.sum(row * np.log(row))
        assert abs(entropy - np.log(target)) <= LOG_PERPLEXITY_TOL


def test_symmetrized_p_sums_to_one(rng):
    points = rng.random((12, 5))
    result = tsne(points, perplexity=4.0, seed=1, iterations=10)
    n = len(points)
    P = (result.conditional_p + result.conditional_p.T) / (2.0 * n)
    assert abs(P.sum() - 1.0) <= 1e-9


def test_kl_decreases(rng):
    points = two_channel_groups(rng)
    result = tsne(points, perplexity=5.0, seed=3, iterations=400)
    assert result.final_kl < result.initial_kl


def test_deterministic_under_seed(rng):
    points = two_channel_groups(rng)
    a = tsne(points, perplexity=5.0, seed=42, iterations=150)
    b = tsne(points, perplexity=5.0, seed=42, iterations=150)
    assert a.embedding.tobytes() == b.embedding.tobytes()
    c = tsne(points, perplexity=5.0, seed=43, iterations=150)
    assert a.embedding.tobytes() != c.embedding.tobytes()


def test_disjoint_groups_trustworthy_layout(rng):
    points = two_channel_groups(rng)  # n = 20
    result = tsne(points, perplexity=5.0, seed=7, iterations=500)
    unit = points / np.linalg.norm(points, axis=1, keepdims=True)
    cosine_dist = 1.0 - unit @ unit.T
    score = trustworthiness(cosine_dist, result.embedding, k=5)
    assert score > 0.9
    oracle = trustworthiness_oracle(
        cosine_dist.tolist(), result.embedding.tolist(), k=5
    )
    assert score == pytest.approx(oracle, abs=1e-9)


def test_trustworthiness_perfect_on_identity(rng):
    # an embedding that IS the input preserves all neighborhoods
    points = rng.random((14, 2))
    distances = pairwise_sq_euclidean(points)
    assert trustworthiness(distances, points, k=3) == pytest.approx(1.0)


def test_cosine_metric_mode(rng):
    points = two_channel_groups(rng)
    result = tsne(points, perplexity=4.0, seed=1, iterations=300, metric="cosine")
    assert result.final_kl < result.initial_kl
    with pytest.raises(UsageError):
        tsne(points, perplexity=4.0, seed=1, metric="manhattan")
