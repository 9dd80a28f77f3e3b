"""Principal component analysis by eigendecomposition of the sample covariance."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..preprocess import FeatureMatrix


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # k x d, rows are principal axes
    explained_variance: np.ndarray  # eigenvalues of the retained axes
    explained_variance_ratio: np.ndarray
    input_features: tuple[str, ...] = ()

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_input(self) -> int:
        return self.components.shape[1]

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(f"pc{i + 1}" for i in range(self.n_components))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "input_features": list(self.input_features),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(np.asarray(d["mean"], dtype=np.float64),
                   np.asarray(d["components"], dtype=np.float64),
                   np.asarray(d["explained_variance"], dtype=np.float64),
                   np.asarray(d["explained_variance_ratio"], dtype=np.float64),
                   tuple(d.get("input_features", ())))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "PcaModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _values(X) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(X, FeatureMatrix):
        return X.values, X.feature_names
    arr = np.asarray(X, dtype=np.float64)
    return arr, tuple(f"x{j}" for j in range(arr.shape[1]))


def pca_fit(X, k: int) -> PcaModel:
    """Fit the top-``k`` principal axes.

    Ratios are eigenvalue over the sum of all eigenvalues. Every axis is
    oriented so its largest-magnitude coordinate is positive.
    """
    values, names = _values(X)
    n, d = values.shape
    if not (1 <= k <= min(n - 1, d)):
        raise DataError(f"k={k} out of range [1, {min(n - 1, d)}]")
    if not np.isfinite(values).all():
        raise DataError("PCA input contains non-finite values")
    mean = values.mean(axis=0)
    centered = values - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals, kind="stable")[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order].T
    pivot = np.argmax(np.abs(eigvecs), axis=1)
    signs = np.sign(eigvecs[np.arange(d), pivot])
    eigvecs = eigvecs * np.where(signs == 0, 1.0, signs)[:, None]
    total = eigvals.sum()
    ratios = eigvals / total if total > 0 else np.zeros_like(eigvals)
    return PcaModel(mean, eigvecs[:k].copy(), eigvals[:k].copy(), ratios[:k].copy(), names)


def pca_transform(model: PcaModel, X) -> FeatureMatrix:
    values, _ = _values(X)
    if values.ndim != 2 or values.shape[1] != model.n_input:
        raise DataError(f"expected {model.n_input} features, got {values.shape[-1]}")
    return FeatureMatrix((values - model.mean) @ model.components.T, model.output_names)


def pca_inverse(model: PcaModel, scores) -> np.ndarray:
    values = np.asarray(getattr(scores, "values", scores), dtype=np.float64)
    return values @ model.components[: values.shape[1]] + model.mean
