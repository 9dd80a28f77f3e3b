"""Simplified UMAP: exact k-NN fuzzy graph plus batched stochastic layout."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist

from ..errors import DataError
from .embedding import Embedding


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    epochs: int = 200
    output_dim: int = 2
    seed: int = 0
    negative_sample_rate: int = 5
    learning_rate: float = 1.0

    def validate(self, n: int) -> None:
        if not (2 <= self.n_neighbors < n):
            raise DataError(f"n_neighbors={self.n_neighbors} out of range [2, {n - 1}]")
        if self.min_dist < 0:
            raise DataError("min_dist must be >= 0")
        if self.output_dim not in (2, 3):
            raise DataError("output_dim must be 2 or 3")


@lru_cache(maxsize=None)
def find_ab_params(spread: float = 1.0, min_dist: float = 0.1) -> tuple[float, float]:
    """Least-squares fit of 1 / (1 + a x^(2b)) to the offset-exponential membership curve."""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(curve, xv, yv)
    return float(a), float(b)


def nearest_neighbors(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors (self excluded), ties by lower row index."""
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    idx = np.argsort(D, axis=1, kind="stable")[:, :k]
    return idx, np.take_along_axis(D, idx, axis=1)


def smooth_knn_bandwidths(dists: np.ndarray, tol: float = 1e-5, max_iter: int = 128
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Solve sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k) for each row."""
    k = dists.shape[1]
    target = np.log2(k)
    rho = dists[:, 0].copy()
    shifted = np.maximum(dists - rho[:, None], 0.0)
    lo = np.zeros(len(dists))
    hi = np.full(len(dists), np.inf)
    sigma = np.ones(len(dists))
    for _ in range(max_iter):
        total = np.exp(-shifted / sigma[:, None]).sum(axis=1)
        if np.all(np.abs(total - target) < tol):
            break
        too_small = total < target  # sum grows with sigma
        lo = np.where(too_small, sigma, lo)
        hi = np.where(too_small, hi, sigma)
        sigma = np.where(np.isinf(hi), sigma * 2.0, (lo + hi) / 2.0)
    return sigma, rho


def fuzzy_graph(X, n_neighbors: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (directed memberships, fuzzy union) as dense n x n matrices."""
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    n = values.shape[0]
    idx, dists = nearest_neighbors(values, n_neighbors)
    sigma, rho = smooth_knn_bandwidths(dists)
    w = np.exp(-np.maximum(dists - rho[:, None], 0.0) / sigma[:, None])
    W = np.zeros((n, n))
    W[np.repeat(np.arange(n), n_neighbors), idx.ravel()] = w.ravel()
    return W, W + W.T - W * W.T


def _clip(v):
    return np.clip(v, -4.0, 4.0)


def umap_embed(X, params: UmapParams = UmapParams(), labels=None) -> Embedding:
    """Optimize a low-dimensional layout of the fuzzy k-NN graph.

    Each epoch processes every edge due for sampling (edges are sampled in
    proportion to weight) in one batch: attraction moves both endpoints, and
    ``negative_sample_rate`` uniformly drawn points repel the head. Batching
    keeps the result independent of any update schedule.
    """
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    n = values.shape[0]
    params.validate(n)
    a, b = find_ab_params(params.spread, params.min_dist)
    _, G = fuzzy_graph(values, params.n_neighbors)
    heads, tails = np.nonzero(G)
    weights = G[heads, tails]
    epochs_per_sample = weights.max() / weights
    next_sample = epochs_per_sample.copy()
    rng = np.random.default_rng(params.seed)
    Y = rng.uniform(-10.0, 10.0, (n, params.output_dim))
    for epoch in range(1, params.epochs + 1):
        alpha = params.learning_rate * (1.0 - (epoch - 1) / params.epochs)
        active = np.flatnonzero(next_sample <= epoch)
        next_sample[active] += epochs_per_sample[active]
        if len(active) == 0:
            continue
        h, t = heads[active], tails[active]
        diff = Y[h] - Y[t]
        d2 = np.sum(diff * diff, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(d2 > 0, -2.0 * a * b * d2 ** (b - 1.0) / (1.0 + a * d2**b), 0.0)
        move = _clip(coef[:, None] * diff) * alpha
        delta = np.zeros_like(Y)
        np.add.at(delta, h, move)
        np.add.at(delta, t, -move)

        neg_h = np.repeat(h, params.negative_sample_rate)
        neg_t = rng.integers(0, n, len(neg_h))
        keep = neg_h != neg_t
        neg_h, neg_t = neg_h[keep], neg_t[keep]
        diff = Y[neg_h] - Y[neg_t]
        d2 = np.sum(diff * diff, axis=1)
        coef = 2.0 * b / ((0.001 + d2) * (1.0 + a * d2**b))
        move = np.where((d2 > 0)[:, None], _clip(coef[:, None] * diff), 4.0) * alpha
        np.add.at(delta, neg_h, move)
        Y = Y + delta
    if labels is None:
        labels = [""] * n
    snapshot = asdict(params) | {"a": a, "b": b}
    return Embedding(Y, tuple(labels), "umap", snapshot)
