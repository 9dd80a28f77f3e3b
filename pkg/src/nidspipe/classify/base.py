"""Uniform model contract, hyperparameter defaults and versioned serialization."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, ModelFormatError, UnsupportedError

MODEL_FORMAT = "nidspipe-model"
MODEL_VERSION = 1

VARIANTS = ("decision_tree", "random_forest", "knn", "gaussian_nb", "mlp", "linear_svc")
SHORT_NAMES = {
    "decision_tree": "DT",
    "random_forest": "RF",
    "knn": "KNN",
    "gaussian_nb": "GNB",
    "mlp": "MLP",
    "linear_svc": "SVC",
}

DEFAULT_HYPERPARAMS = {
    "decision_tree": {"max_depth": 30, "min_samples_split": 2},
    "random_forest": {"n_trees": 100, "max_depth": 30, "min_samples_split": 2,
                      "max_features": "sqrt", "bootstrap": True},
    "knn": {"k": 5},
    "gaussian_nb": {"var_floor": 1e-9},
    "mlp": {"hidden": 64, "learning_rate": 0.01, "epochs": 20, "batch_size": 128},
    "linear_svc": {"lam": 1e-4, "epochs": 20, "intercept_scaling": 1.0, "project": True},
}


def _positive_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _positive_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


_VALIDATORS = {
    "max_depth": _positive_int,
    "min_samples_split": lambda v: _positive_int(v) and v >= 2,
    "n_trees": _positive_int,
    "max_features": lambda v: v in ("sqrt", None) or _positive_int(v),
    "bootstrap": lambda v: isinstance(v, bool),
    "k": _positive_int,
    "var_floor": _positive_real,
    "hidden": _positive_int,
    "learning_rate": _positive_real,
    "epochs": _positive_int,
    "batch_size": _positive_int,
    "lam": _positive_real,
    "intercept_scaling": _positive_real,
    "project": lambda v: isinstance(v, bool),
}


def resolve_hyperparams(variant: str, overrides: dict | None = None) -> dict:
    """Merge ``overrides`` into the documented defaults, validating every value."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown classifier {variant!r}; choose from {VARIANTS}")
    hp = dict(DEFAULT_HYPERPARAMS[variant])
    for key, value in (overrides or {}).items():
        if key not in hp:
            raise ConfigError(f"{variant}: unknown hyperparameter {key!r}")
        hp[key] = value
    for key, value in hp.items():
        if not _VALIDATORS[key](value):
            raise ConfigError(f"{variant}: invalid value {value!r} for {key!r}")
    return hp


def as_matrix(X) -> np.ndarray:
    values = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if values.ndim == 1 and values.size == 0:
        values = values.reshape(0, 0)
    if values.ndim != 2:
        raise DataError("expected a two-dimensional feature matrix")
    return values


def check_training_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    values = as_matrix(X)
    y = np.asarray(y)
    if len(values) != len(y):
        raise DataError(f"{len(values)} rows but {len(y)} labels")
    if len(y) == 0:
        raise DataError("cannot train on an empty dataset")
    if not np.isfinite(values).all():
        raise DataError("training matrix contains non-finite values")
    return values, y


class TrainedModel:
    """Common surface of all six classifiers.

    Subclasses implement ``_scores`` (the natural score, higher means more
    likely the second class) or ``predict_proba``, and parameter
    serialization. ``threshold`` is the natural operating point: in binary
    mode ``predict`` equals ``predict_score > threshold``.
    """

    variant: str = ""
    threshold: float = 0.5
    multiclass: bool = True

    def __init__(self, classes, n_features: int, hyperparams: dict, seed: int, metadata=None):
        self.classes = np.asarray(classes)
        self.n_features = int(n_features)
        self.hyperparams = dict(hyperparams)
        self.seed = int(seed)
        self.metadata = dict(metadata or {})

    @property
    def is_binary(self) -> bool:
        return len(self.classes) == 2

    def _check(self, X) -> np.ndarray:
        values = as_matrix(X)
        if values.shape[0] == 0:
            return values.reshape(0, self.n_features)
        if values.shape[1] != self.n_features:
            raise DataError(
                f"{self.variant}: model expects {self.n_features} features, got {values.shape[1]}")
        return values

    def predict(self, X) -> np.ndarray:
        values = self._check(X)
        if len(values) == 0:
            return np.empty(0, dtype=self.classes.dtype)
        return self.classes[self._predict_index(values)]

    def predict_score(self, X) -> np.ndarray:
        if not self.is_binary:
            raise UnsupportedError(f"{self.variant}: scores are defined for binary models only")
        values = self._check(X)
        if len(values) == 0:
            return np.empty(0)
        return self._scores(values)

    def _predict_index(self, values: np.ndarray) -> np.ndarray:
        return (self._scores(values) > self.threshold).astype(np.int64)

    def _scores(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- serialization -----------------------------------------------------

    def _params_to_dict(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_params(cls, params: dict, **common) -> "TrainedModel":
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "variant": self.variant,
            "n_features": self.n_features,
            "classes": self.classes.tolist(),
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "metadata": self.metadata,
            "params": self._params_to_dict(),
        }

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")


_REGISTRY: dict[str, type] = {}


def register(cls):
    _REGISTRY[cls.variant] = cls
    return cls


def model_from_dict(d: dict, expected_features: int | None = None) -> TrainedModel:
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a nidspipe model file")
    if d.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"model version {d.get('version')!r} unsupported (expected {MODEL_VERSION})")
    cls = _REGISTRY.get(d.get("variant"))
    if cls is None:
        raise ModelFormatError(f"unknown model variant {d.get('variant')!r}")
    n_features = int(d["n_features"])
    if expected_features is not None and n_features != expected_features:
        raise ModelFormatError(
            f"model expects {n_features} features but the data has {expected_features}")
    try:
        model = cls._from_params(d["params"], classes=d["classes"], n_features=n_features,
                                 hyperparams=d["hyperparams"], seed=d["seed"],
                                 metadata=d.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt {d['variant']} parameters: {exc}") from exc
    return model


def load_model(path, expected_features: int | None = None) -> TrainedModel:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot parse model file {path}: {exc}") from exc
    return model_from_dict(d, expected_features)
