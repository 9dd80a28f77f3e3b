"""Training-set rebalancing by random oversampling or SMOTE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError


@dataclass(frozen=True)
class BalanceReport:
    method: str
    seed: int
    per_class: dict  # class -> {"before", "after", "synthetic"}
    notes: tuple[str, ...] = ()
    k_neighbors: int | None = None
    k_used: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": int(self.seed),
            "k_neighbors": self.k_neighbors,
            "k_used": {str(c): int(k) for c, k in self.k_used.items()},
            "per_class": {str(c): dict(v) for c, v in self.per_class.items()},
            "notes": list(self.notes),
        }


def _class_counts(y: np.ndarray):
    if len(y) == 0:
        raise DataError("cannot balance an empty training set")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise DataError("balancing requires at least two classes")
    return classes, counts


def _values(X) -> tuple[np.ndarray, object]:
    if hasattr(X, "values") and hasattr(X, "feature_names"):
        return np.asarray(X.values), X.feature_names
    return np.asarray(X, dtype=np.float64), None


def _wrap(values: np.ndarray, names):
    if names is None:
        return values
    from .preprocess import FeatureMatrix

    return FeatureMatrix(values, names)


def no_balance(X, y, seed: int = 0):
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    per_class = {c.item(): {"before": int(n), "after": int(n), "synthetic": 0}
                 for c, n in zip(classes, counts)}
    return X, y, BalanceReport("none", seed, per_class)


def random_oversample(X, y, seed: int = 0):
    """Append uniformly drawn copies of minority rows until every class matches the majority.

    Original rows come first and are unchanged. RNG order: classes ascending,
    one draw of ``need`` indices per class.
    """
    values, names = _values(X)
    y = np.asarray(y)
    classes, counts = _class_counts(y)
    target = counts.max()
    rng = np.random.default_rng(int(seed))
    new_X, new_y, per_class = [values], [y], {}
    for c, n in zip(classes, counts):
        need = int(target - n)
        if need:
            members = np.flatnonzero(y == c)
            picks = members[rng.integers(0, len(members), need)]
            new_X.append(values[picks])
            new_y.append(np.full(need, c, dtype=y.dtype))
        per_class[c.item()] = {"before": int(n), "after": int(target), "synthetic": need}
    return (_wrap(np.vstack(new_X), names), np.concatenate(new_y),
            BalanceReport("random_oversample", seed, per_class))


def same_class_neighbors(points: np.ndarray, rows: np.ndarray, k: int,
                         chunk: int = 512) -> np.ndarray:
    """For each index in ``rows``, its ``k`` nearest other points; ties by lower index."""
    out = np.empty((len(rows), k), dtype=np.int64)
    for start in range(0, len(rows), chunk):
        sel = rows[start:start + chunk]
        D = cdist(points[sel], points, "sqeuclidean")
        D[np.arange(len(sel)), sel] = np.inf
        out[start:start + len(sel)] = np.argsort(D, axis=1, kind="stable")[:, :k]
    return out


def smote(X, y, k_neighbors: int = 5, seed: int = 0):
    """Synthesize minority rows by interpolating toward same-class nearest neighbors.

    For each synthetic row: pick a base row of the class uniformly, pick one of
    its ``k`` nearest same-class neighbors uniformly, and emit
    ``base + u * (neighbor - base)`` with ``u ~ U[0, 1]``. ``k`` is clamped to
    ``class_size - 1``; a class with a single member is duplicated instead.
    RNG order per class (ascending): bases, neighbor slots, interpolation factors.
    """
    if k_neighbors < 1:
        raise DataError("k_neighbors must be >= 1")
    values, names = _values(X)
    y = np.asarray(y)
    classes, counts = _class_counts(y)
    target = counts.max()
    rng = np.random.default_rng(int(seed))
    new_X, new_y, per_class, notes, k_used = [values], [y], {}, [], {}
    for c, n in zip(classes, counts):
        key = c.item()
        need = int(target - n)
        per_class[key] = {"before": int(n), "after": int(target), "synthetic": need}
        if need == 0:
            continue
        members = np.flatnonzero(y == c)
        pts = values[members]
        if n == 1:
            notes.append(f"class {key}: single member, duplicated instead of interpolated")
            k_used[key] = 0
            new_X.append(np.repeat(pts, need, axis=0))
            new_y.append(np.full(need, c, dtype=y.dtype))
            continue
        k = min(k_neighbors, int(n) - 1)
        if k < k_neighbors:
            notes.append(f"class {key}: k clamped from {k_neighbors} to {k}")
        k_used[key] = k
        base = rng.integers(0, n, need)
        slot = rng.integers(0, k, need)
        u = rng.random(need)
        uniq, inverse = np.unique(base, return_inverse=True)
        nbrs = same_class_neighbors(pts, uniq, k)
        partner = nbrs[inverse, slot]
        synth = pts[base] + u[:, None] * (pts[partner] - pts[base])
        new_X.append(synth)
        new_y.append(np.full(need, c, dtype=y.dtype))
    report = BalanceReport("smote", seed, per_class, tuple(notes), k_neighbors, k_used)
    return _wrap(np.vstack(new_X), names), np.concatenate(new_y), report


def balance(X, y, method: str = "smote", k_neighbors: int = 5, seed: int = 0):
    if method == "smote":
        return smote(X, y, k_neighbors, seed)
    if method == "random_oversample":
        return random_oversample(X, y, seed)
    if method == "none":
        return no_balance(X, y, seed)
    raise DataError(f"unknown balance method {method!r}")
