"""Exact (O(n^2)) t-SNE with per-point bandwidth search.

Sized for channel maps of under a few hundred points, so no tree
approximation is needed. Conditional Gaussian bandwidths are binary-searched
to the target perplexity; the embedding is optimized by gradient descent
with early exaggeration, the usual two-phase momentum schedule, and
per-coordinate gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError

_EPS = 1e-12
LOG_PERPLEXITY_TOL = 1e-5


def pairwise_sq_euclidean(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def pairwise_cosine_distance(points: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise UsageError("cosine distance undefined for zero vectors")
    unit = points / norms
    dist = 1.0 - unit @ unit.T
    np.fill_diagonal(dist, 0.0)
    return np.maximum(dist, 0.0)


def _row_entropy_probs(distances_row: np.ndarray, beta: float, i: int) -> tuple[float, np.ndarray]:
    """Shannon entropy (nats) and conditional probabilities for one point."""
    shifted = -distances_row * beta
    shifted[i] = -np.inf  # p_{i|i} = 0
    shifted -= shifted.max()
    exp = np.exp(shifted)
    exp[i] = 0.0
    total = exp.sum()
    probs = exp / total
    nonzero = probs > 0
    entropy = float(-np.sum(probs[nonzero] * np.log(probs[nonzero])))
    return entropy, probs


def binary_search_affinities(
    distances: np.ndarray, perplexity: float, max_steps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row conditional probabilities hitting the target perplexity.

    Returns (P_conditional, betas) where each row of P sums to 1 and its
    perplexity matches the target within `LOG_PERPLEXITY_TOL` in log space.
    """
    n = distances.shape[0]
    target = float(np.log(perplexity))
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        entropy, probs = _row_entropy_probs(distances[i], beta, i)
        for _ in range(max_steps):
            if abs(entropy - target) <= LOG_PERPLEXITY_TOL:
                break
            if entropy > target:  # too spread out -> narrow the kernel
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = (beta + beta_min) / 2.0
            entropy, probs = _row_entropy_probs(distances[i], beta, i)
        P[i] = probs
        betas[i] = beta
    return P, betas


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], _EPS))))


def _student_q(embedding: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = pairwise_sq_euclidean(embedding)
    num = 1.0 / (1.0 + d2)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return np.maximum(Q, _EPS), num


@dataclass(frozen=True)
class TsneResult:
    embedding: np.ndarray  # (n, 2)
    initial_kl: float
    final_kl: float
    betas: np.ndarray
    conditional_p: np.ndarray


def tsne(
    vectors,
    perplexity: float,
    seed: int,
    iterations: int = 1000,
    learning_rate: float | None = None,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int = 250,
    metric: str = "euclidean",
) -> TsneResult:
    """Project vectors to 2-D, deterministically under `seed`.

    Momentum runs 0.5 for the exaggerated phase and 0.8 after; the default
    learning rate is max(n / early_exaggeration / 4, 50), which stays stable
    at small n. The KL at the random init and at the end are both reported
    (the final one must be lower, which the caller can assert).
    """
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise UsageError("vectors must form an (n, d) matrix")
    n = matrix.shape[0]
    if n < 3:
        raise UsageError("t-SNE needs at least 3 points")
    if perplexity >= n:
        raise UsageError(f"perplexity {perplexity} must be < n = {n}")
    if perplexity < 1:
        raise UsageError("perplexity must be >= 1")

    if metric == "euclidean":
        distances = pairwise_sq_euclidean(matrix)
    elif metric == "cosine":
        distances = pairwise_cosine_distance(matrix)
    else:
        raise UsageError(f"unknown metric {metric!r}")

    cond, betas = binary_search_affinities(distances, perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, _EPS / (n * n))
    if learning_rate is None:
        learning_rate = max(n / early_exaggeration / 4.0, 50.0)
    # a short run must still end with a non-exaggerated phase, or the final
    # KL cannot be trusted to undercut the initial one
    exaggeration_iters = min(exaggeration_iters, iterations // 2)

    rng = np.random.default_rng(seed)
    embedding = rng.standard_normal((n, 2)) * 1e-4
    Q, _ = _student_q(embedding)
    initial_kl = _kl_divergence(P, Q)

    update = np.zeros_like(embedding)
    gains = np.ones_like(embedding)
    best_kl = np.inf
    best_embedding = embedding
    for it in range(iterations):
        exaggerating = it < exaggeration_iters
        P_eff = P * early_exaggeration if exaggerating else P
        momentum = 0.5 if exaggerating else 0.8
        Q, num = _student_q(embedding)
        if not exaggerating:
            kl = _kl_divergence(P, Q)
            if kl < best_kl:
                best_kl, best_embedding = kl, embedding
        PQ = (P_eff - (num / num.sum())) * num
        grad = np.zeros_like(embedding)
        for dim in range(2):
            diff = embedding[:, dim][:, None] - embedding[:, dim][None, :]
            grad[:, dim] = 4.0 * np.sum(PQ * diff, axis=1)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - learning_rate * gains * grad
        embedding = embedding + update
        embedding = embedding - embedding.mean(axis=0)

    Q, _ = _student_q(embedding)
    final_kl = _kl_divergence(P, Q)
    if best_kl < final_kl:  # the trajectory's best layout wins
        final_kl, embedding = best_kl, best_embedding
    return TsneResult(
        embedding=embedding,
        initial_kl=initial_kl,
        final_kl=final_kl,
        betas=betas,
        conditional_p=cond,
    )


def trustworthiness(
    input_distances: np.ndarray, embedding: np.ndarray, k: int
) -> float:
    """Rank-based local-neighborhood preservation score in [0, 1].

    Penalizes embedding neighbors that were not input-space neighbors,
    weighting by how far down the input ranking they sat.
    """
    n = input_distances.shape[0]
    if not 1 <= k < n / 2:
        raise UsageError(f"k={k} must satisfy 1 <= k < n/2 = {n / 2}")
    emb_d = pairwise_sq_euclidean(embedding)

    # rank[i, j]: position of j in i's input-space nearest ordering (1-based,
    # excluding i itself)
    ranks = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        order = np.argsort(input_distances[i], kind="stable")
        order = order[order != i]
        for pos, j in enumerate(order, start=1):
            ranks[i, j] = pos

    penalty = 0.0
    for i in range(n):
        order = np.argsort(emb_d[i], kind="stable")
        order = order[order != i]
        for j in order[:k]:
            penalty += max(0, ranks[i, j] - k)
    return 1.0 - (2.0 / (n * k * (2 * n - 3 * k - 1))) * penalty
