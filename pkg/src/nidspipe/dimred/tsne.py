"""Exact t-SNE (no Barnes-Hut approximation)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DataError
from .embedding import Embedding


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    output_dim: int = 2
    seed: int = 0
    kl_every: int = 10

    def validate(self, n: int) -> None:
        if n < 10:
            raise DataError(f"t-SNE needs at least 10 points, got {n}")
        if not (0 < self.perplexity < (n - 1) / 3):
            raise DataError(
                f"perplexity {self.perplexity} infeasible for n={n} (must be < {(n - 1) / 3:.3f})")
        if self.output_dim not in (2, 3):
            raise DataError("output_dim must be 2 or 3")
        if self.iterations < self.exaggeration_iters:
            raise DataError("iterations must be >= exaggeration_iters")


def squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def conditional_probabilities(D: np.ndarray, perplexity: float, tol: float = 1e-5,
                              max_iter: int = 200) -> np.ndarray:
    """Row-stochastic Gaussian affinities whose perplexity matches ``perplexity``.

    The precision of each row is found by simultaneous bisection; entropy is in
    bits so perplexity is ``2 ** H``.
    """
    n = D.shape[0]
    mask = ~np.eye(n, dtype=bool)
    d = D[mask].reshape(n, n - 1)
    # Shifting by the row minimum leaves the normalized row unchanged.
    d = d - d.min(axis=1, keepdims=True)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    beta = np.ones(n)
    target = np.log2(perplexity)

    def rows(beta):
        w = np.exp(-d * beta[:, None])
        s = w.sum(axis=1, keepdims=True)
        p = w / s
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.sum(np.where(p > 0, p * np.log2(p), 0.0), axis=1)
        return p, h

    for _ in range(max_iter):
        p, h = rows(beta)
        perp = 2.0 ** h
        if np.all(np.abs(perp - perplexity) < tol):
            break
        too_flat = h > target  # entropy too high -> increase precision
        lo = np.where(too_flat, beta, lo)
        hi = np.where(too_flat, hi, beta)
        beta = np.where(np.isinf(hi), beta * 2.0, (lo + hi) / 2.0)
    p, _ = rows(beta)
    P = np.zeros((n, n))
    P[mask] = p.ravel()
    return P


def joint_probabilities(X: np.ndarray, perplexity: float) -> np.ndarray:
    P = conditional_probabilities(squared_distances(X), perplexity)
    P = (P + P.T) / (2.0 * P.shape[0])
    return P / P.sum()


def student_t_affinities(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (Q, kernel) where kernel = 1 / (1 + |y_i - y_j|^2) with zero diagonal."""
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    nz = P > 0
    return float(np.sum(P[nz] * np.log(P[nz] / np.maximum(Q[nz], 1e-300))))


def kl_gradient(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q(Y)) and its gradient 4 * sum_j (p_ij - q_ij) k_ij (y_i - y_j)."""
    Q, num = student_t_affinities(Y)
    W = (P - Q) * num
    grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
    return kl_divergence(P, Q), grad


def tsne_embed(X, params: TsneParams = TsneParams(), labels=None) -> Embedding:
    """Embed rows of ``X`` in 2 or 3 dimensions.

    Optimization follows the usual recipe: early exaggeration of P, momentum
    switch, and per-coordinate adaptive gains. ``Embedding.trace`` holds
    ``(iteration, KL)`` pairs computed against the unexaggerated P.
    """
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    n = values.shape[0]
    params.validate(n)
    P = joint_probabilities(values, params.perplexity)
    rng = np.random.default_rng(params.seed)
    Y = 1e-4 * rng.standard_normal((n, params.output_dim))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = []
    for it in range(params.iterations):
        exaggerate = it < params.exaggeration_iters
        P_used = P * params.early_exaggeration if exaggerate else P
        Q, num = student_t_affinities(Y)
        W = (P_used - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
        if it % params.kl_every == 0 or it == params.exaggeration_iters:
            trace.append((it, kl_divergence(P, Q)))
        momentum = params.momentum_initial if it < params.momentum_switch else params.momentum_final
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - params.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
    Q, _ = student_t_affinities(Y)
    trace.append((params.iterations, kl_divergence(P, Q)))
    if labels is None:
        labels = [""] * n
    return Embedding(Y, tuple(labels), "tsne", asdict(params), tuple(trace))
