"""Plug-in mutual information between a numeric feature and class labels."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError


def equal_frequency_bins(x, n_bins: int) -> np.ndarray:
    """Assign each value to one of at most ``n_bins`` rank-based bins.

    Edges are order statistics (no interpolation), so any strictly increasing
    transform of ``x`` yields the same assignment. Tied values always share a
    bin, so fewer than ``n_bins`` bins may be used.
    """
    x = np.asarray(x, dtype=np.float64)
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    probs = np.arange(1, n_bins) / n_bins
    edges = np.unique(np.quantile(x, probs, method="inverted_cdf"))
    return np.searchsorted(edges, x, side="left")


def mutual_information(feature, labels, n_bins: int = 10) -> float:
    """MI in bits between an equal-frequency discretization of ``feature`` and ``labels``."""
    x = np.asarray(feature, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 1 or len(x) != len(y):
        raise DataError(f"length mismatch: feature {x.shape}, labels {y.shape}")
    if not np.isfinite(x).all():
        raise DataError("feature contains non-finite values")
    if len(x) == 0:
        return 0.0
    bx = equal_frequency_bins(x, n_bins)
    _, by = np.unique(y, return_inverse=True)
    joint = np.zeros((bx.max() + 1, by.max() + 1))
    np.add.at(joint, (bx, by), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz]))
    return max(float(mi), 0.0)


@dataclass(frozen=True)
class RankedFeatures:
    """Features ordered by descending MI score (bits); ties by name."""

    entries: tuple[tuple[str, float], ...]
    units: str = "bits"

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def top(self, k: int) -> list[str]:
        return self.names[:k]

    def to_dict(self) -> dict:
        return {"units": self.units,
                "entries": [{"feature": n, "mi": s} for n, s in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "RankedFeatures":
        return cls(tuple((e["feature"], float(e["mi"])) for e in d["entries"]), d.get("units", "bits"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RankedFeatures":
        return cls.from_dict(json.loads(Path(path).read_text()))


def rank_features(X, labels, n_bins: int = 10) -> RankedFeatures:
    """Score every column of a FeatureMatrix against ``labels`` and sort."""
    values = np.asarray(X.values)
    if values.shape[0] == 0 or values.shape[1] == 0:
        raise DataError("cannot rank features of an empty matrix")
    scores = [(name, mutual_information(values[:, j], labels, n_bins))
              for j, name in enumerate(X.feature_names)]
    scores.sort(key=lambda e: (-e[1], e[0]))
    return RankedFeatures(tuple(scores))
