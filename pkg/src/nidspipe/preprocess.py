"""Column denoising, imputation, skew-correcting log transform, one-hot encoding
and train-fitted standardization.

Fitting happens on the training partition only; :func:`apply_preprocess` then
maps any partition through the stored statistics in the fixed order
impute -> log -> one-hot -> standardize.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_model import CATEGORICAL, NUMERIC, Dataset
from .errors import DataError, SchemaMismatch

PLAN_VERSION = 1


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        if values.shape[1] != len(self.feature_names):
            raise DataError(
                f"{values.shape[1]} columns but {len(self.feature_names)} feature names"
            )
        if not np.isfinite(values).all():
            raise DataError("feature matrix contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def shape(self):
        return self.values.shape

    def select(self, names) -> "FeatureMatrix":
        pos = {n: i for i, n in enumerate(self.feature_names)}
        try:
            idx = [pos[n] for n in names]
        except KeyError as exc:
            raise SchemaMismatch(f"unknown feature {exc.args[0]!r}") from None
        return FeatureMatrix(self.values[:, idx], tuple(names))


# ---------------------------------------------------------------------------
# Denoising


def _is_constant(arr: np.ndarray, kind: str) -> bool:
    if len(arr) == 0:
        return True
    if kind == NUMERIC:
        nan = np.isnan(arr)
        if nan.all():
            return True
        if nan.any():
            return False
        return bool((arr == arr[0]).all())
    return len(set(arr.tolist())) == 1


def _identical(a: np.ndarray, b: np.ndarray, kind: str) -> bool:
    if kind == NUMERIC:
        return np.array_equal(a, b, equal_nan=True)
    return a.tolist() == b.tolist()


def drop_redundant(ds: Dataset) -> tuple[Dataset, list[dict]]:
    """Remove constant, duplicate and identifier-like feature columns.

    Identifier-like means a categorical column whose values are all distinct.
    Returns the reduced dataset and a list of ``{"column", "reason"}`` records.
    """
    if ds.n_rows == 0:
        raise DataError("cannot denoise an empty dataset")
    dropped = []
    kept = []
    for col in ds.feature_schema:
        arr = ds.column(col.name)
        if _is_constant(arr, col.kind):
            dropped.append({"column": col.name, "reason": "constant"})
            continue
        dup_of = next((k.name for k in kept if k.kind == col.kind
                       and _identical(ds.column(k.name), arr, col.kind)), None)
        if dup_of is not None:
            dropped.append({"column": col.name, "reason": f"duplicate of {dup_of}"})
            continue
        if col.kind == CATEGORICAL and ds.n_rows > 1 and len(set(arr.tolist())) == ds.n_rows:
            dropped.append({"column": col.name, "reason": "identifier-like"})
            continue
        kept.append(col)
    if not kept:
        raise DataError("every feature column was dropped as redundant")
    return ds.drop_columns(d["column"] for d in dropped), dropped


# ---------------------------------------------------------------------------
# Statistics


def skewness(values) -> float:
    """Adjusted Fisher-Pearson sample skewness ``g1 * sqrt(n(n-1)) / (n-2)``.

    Non-finite values are ignored. A zero-variance column has skewness 0.
    """
    x = np.asarray(values, dtype=np.float64)
    x = x[np.isfinite(x)]
    n = len(x)
    if n < 3:
        raise DataError("skewness needs at least 3 finite values")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    if m2 <= 1e-300 or np.all(x == x[0]):
        return 0.0
    m3 = np.mean(dev**3)
    g1 = m3 / m2**1.5
    return float(g1 * math.sqrt(n * (n - 1)) / (n - 2))


def _median(arr: np.ndarray) -> float:
    finite = arr[~np.isnan(arr)]
    return float(np.median(finite)) if len(finite) else 0.0


def _mode(arr: np.ndarray) -> str:
    counts = Counter(v for v in arr.tolist() if v is not None)
    if not counts:
        return ""
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


# ---------------------------------------------------------------------------
# Plan


@dataclass(frozen=True)
class PreprocessPlan:
    """Fitted preprocessing statistics; immutable and JSON-serializable."""

    source_columns: tuple[tuple[str, str], ...]
    dropped_columns: tuple[dict, ...]
    imputation_values: dict
    log_columns: tuple[str, ...]
    log_minimums: dict
    categorical_vocabularies: dict
    feature_names: tuple[str, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]
    skew_threshold: float = 1.0
    skew_values: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {
            "version": PLAN_VERSION,
            "source_columns": [list(c) for c in self.source_columns],
            "dropped_columns": [dict(d) for d in self.dropped_columns],
            "imputation_values": dict(self.imputation_values),
            "log_columns": list(self.log_columns),
            "log_minimums": dict(self.log_minimums),
            "categorical_vocabularies": {k: list(v) for k, v in self.categorical_vocabularies.items()},
            "skew_threshold": self.skew_threshold,
            "skew_values": dict(self.skew_values),
            "standardization": [
                {"feature": n, "mean": m, "std": s}
                for n, m, s in zip(self.feature_names, self.means, self.stds)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessPlan":
        if d.get("version") != PLAN_VERSION:
            raise DataError(f"unsupported preprocess plan version {d.get('version')!r}")
        std = d["standardization"]
        return cls(
            source_columns=tuple(tuple(c) for c in d["source_columns"]),
            dropped_columns=tuple(d["dropped_columns"]),
            imputation_values=dict(d["imputation_values"]),
            log_columns=tuple(d["log_columns"]),
            log_minimums=dict(d["log_minimums"]),
            categorical_vocabularies={k: tuple(v) for k, v in d["categorical_vocabularies"].items()},
            feature_names=tuple(s["feature"] for s in std),
            means=tuple(float(s["mean"]) for s in std),
            stds=tuple(float(s["std"]) for s in std),
            skew_threshold=float(d["skew_threshold"]),
            skew_values=dict(d.get("skew_values", {})),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "PreprocessPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _impute(ds: Dataset, name: str, kind: str, fill) -> np.ndarray:
    arr = ds.column(name)
    if kind == NUMERIC:
        return np.where(np.isnan(arr), fill, arr)
    return np.array([fill if v is None else v for v in arr], dtype=object)


def _log_shift(x: np.ndarray, minimum: float) -> np.ndarray:
    # Rows below the train minimum are clamped so the argument stays >= 1.
    return np.log1p(np.maximum(x - minimum, 0.0))


def _expand(plan_like, ds: Dataset) -> np.ndarray:
    """Impute, log-transform and one-hot encode; returns the pre-standardization matrix."""
    (source, impute, log_cols, log_min, vocab) = plan_like
    blocks = []
    for name, kind in source:
        x = _impute(ds, name, kind, impute[name])
        if kind == NUMERIC:
            x = x.astype(np.float64)
            if name in log_cols:
                x = _log_shift(x, log_min[name])
            blocks.append(x[:, None])
        else:
            values = vocab[name]
            pos = {v: i for i, v in enumerate(values)}
            onehot = np.zeros((ds.n_rows, len(values)))
            for r, v in enumerate(x):
                k = pos.get(v)
                if k is not None:
                    onehot[r, k] = 1.0
            blocks.append(onehot)
    if not blocks:
        return np.empty((ds.n_rows, 0))
    return np.hstack(blocks)


def fit_preprocess(train: Dataset, skew_threshold: float = 1.0,
                   dropped: list[dict] | None = None) -> PreprocessPlan:
    """Fit imputation, log, vocabulary and standardization statistics on ``train``."""
    if train.n_rows == 0:
        raise DataError("cannot fit preprocessing on an empty training set")
    source = tuple((c.name, c.kind) for c in train.feature_schema)
    impute, log_min, vocab, skews = {}, {}, {}, {}
    log_cols = []
    names = []
    for name, kind in source:
        arr = train.column(name)
        if kind == NUMERIC:
            impute[name] = _median(arr)
            x = np.where(np.isnan(arr), impute[name], arr)
            skews[name] = skewness(x) if len(x) >= 3 else 0.0
            if abs(skews[name]) > skew_threshold:
                log_cols.append(name)
                log_min[name] = float(x.min())
            names.append(name)
        else:
            impute[name] = _mode(arr)
            values = sorted({impute[name] if v is None else v for v in arr.tolist()})
            vocab[name] = tuple(values)
            names.extend(f"{name}={v}" for v in values)
    raw = _expand((source, impute, set(log_cols), log_min, vocab), train)
    means = raw.mean(axis=0)
    stds = raw.std(axis=0)
    stds = np.where(stds > 1e-12 * np.maximum(1.0, np.abs(means)), stds, 1.0)
    return PreprocessPlan(
        source_columns=source,
        dropped_columns=tuple(dropped or ()),
        imputation_values=impute,
        log_columns=tuple(log_cols),
        log_minimums=log_min,
        categorical_vocabularies=vocab,
        feature_names=tuple(names),
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) for s in stds),
        skew_threshold=float(skew_threshold),
        skew_values=skews,
    )


def apply_preprocess(plan: PreprocessPlan, ds: Dataset) -> FeatureMatrix:
    """Map ``ds`` to a standardized dense matrix using only ``plan`` statistics.

    Columns listed in ``plan.dropped_columns`` are ignored when present.
    """
    for name, kind in plan.source_columns:
        if name not in ds.columns:
            raise SchemaMismatch(f"column {name!r} required by the preprocess plan is absent")
        if ds.kind(name) != kind:
            raise SchemaMismatch(f"column {name!r}: expected {kind}, found {ds.kind(name)}")
    raw = _expand((plan.source_columns, plan.imputation_values, set(plan.log_columns),
                   plan.log_minimums, plan.categorical_vocabularies), ds)
    values = (raw - np.asarray(plan.means)) / np.asarray(plan.stds)
    return FeatureMatrix(values, plan.feature_names)
