"""Brute-force Euclidean k-nearest-neighbor classifier."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import DataError
from .base import TrainedModel, check_training_data, register, resolve_hyperparams


@register
class KnnModel(TrainedModel):
    """Majority vote of the ``k`` nearest training rows.

    Neighbors at equal distance are taken in training-row order. Vote ties go
    to the class with the larger summed inverse distance, then to the lower
    class index. The score is the fraction of neighbors in the positive class.
    """

    variant = "knn"

    def __init__(self, X_train: np.ndarray, y_index: np.ndarray, k: int, **common):
        super().__init__(**common)
        self.X_train = np.asarray(X_train, dtype=np.float64)
        self.y_index = np.asarray(y_index, dtype=np.int64)
        self.k = int(k)

    def neighbors(self, X, chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
        """Indices and squared distances of each query's k nearest training rows."""
        values = self._check(X)
        k = self.k
        idx = np.empty((len(values), k), dtype=np.int64)
        dist = np.empty((len(values), k))
        for start in range(0, len(values), chunk):
            D = cdist(values[start:start + chunk], self.X_train, "sqeuclidean")
            if k < D.shape[1]:
                kth = np.partition(D, k - 1, axis=1)[:, k - 1]
            else:
                kth = D.max(axis=1)
            for r in range(len(D)):
                cand = np.flatnonzero(D[r] <= kth[r])
                order = cand[np.argsort(D[r, cand], kind="stable")[:k]]
                idx[start + r] = order
                dist[start + r] = D[r, order]
        return idx, dist

    def _votes(self, values):
        idx, sq = self.neighbors(values)
        labels = self.y_index[idx]
        n_cls = len(self.classes)
        counts = np.zeros((len(values), n_cls), dtype=np.int64)
        rows = np.arange(len(values))
        for j in range(self.k):
            counts[rows, labels[:, j]] += 1
        return labels, np.sqrt(sq), counts

    def _predict_index(self, values):
        labels, dist, counts = self._votes(values)
        pred = np.argmax(counts, axis=1)
        tied = (counts == counts.max(axis=1, keepdims=True)).sum(axis=1) > 1
        with np.errstate(divide="ignore"):
            inv = 1.0 / dist
        for r in np.flatnonzero(tied):
            top = np.flatnonzero(counts[r] == counts[r].max())
            weight = [inv[r, labels[r] == c].sum() for c in top]
            best = max(weight)
            pred[r] = min(c for c, w in zip(top, weight) if w == best)
        return pred

    def _scores(self, values):
        _, _, counts = self._votes(values)
        return counts[:, 1] / self.k

    def _params_to_dict(self):
        return {"k": self.k, "X_train": self.X_train.tolist(), "y_index": self.y_index.tolist()}

    @classmethod
    def _from_params(cls, params, **common):
        X = np.asarray(params["X_train"], dtype=np.float64).reshape(-1, common["n_features"])
        return cls(X, params["y_index"], params["k"], **common)


def train_knn(X, y, hp: dict | None = None, seed: int = 0) -> KnnModel:
    hp = resolve_hyperparams("knn", hp)
    values, y = check_training_data(X, y)
    if hp["k"] > len(values):
        raise DataError(f"k={hp['k']} exceeds the {len(values)} training rows")
    classes, yi = np.unique(y, return_inverse=True)
    return KnnModel(values.copy(), yi, hp["k"], classes=classes, n_features=values.shape[1],
                    hyperparams=hp, seed=seed)
