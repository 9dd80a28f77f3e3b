"""Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .base import TrainedModel, check_training_data, register, resolve_hyperparams


@register
class GaussianNbModel(TrainedModel):
    variant = "gaussian_nb"

    def __init__(self, priors, means, variances, **common):
        super().__init__(**common)
        self.priors = np.asarray(priors, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64)
        self.variances = np.asarray(variances, dtype=np.float64)

    def joint_log_likelihood(self, values: np.ndarray) -> np.ndarray:
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=1)[None, :]
        diff = values[:, None, :] - self.means[None, :, :]
        ll = ll - 0.5 * np.sum(diff * diff / self.variances[None, :, :], axis=2)
        return ll + np.log(self.priors)[None, :]

    def predict_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(self._check(X))
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))

    def _predict_index(self, values):
        return np.argmax(self.joint_log_likelihood(values), axis=1)

    def _scores(self, values):
        jll = self.joint_log_likelihood(values)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

    def _params_to_dict(self):
        return {"priors": self.priors.tolist(), "means": self.means.tolist(),
                "variances": self.variances.tolist()}

    @classmethod
    def _from_params(cls, params, **common):
        return cls(params["priors"], params["means"], params["variances"], **common)


def train_gaussian_nb(X, y, hp: dict | None = None, seed: int = 0) -> GaussianNbModel:
    """Per-class priors, feature means and variances.

    Variances are floored at ``var_floor * max_j var(X[:, j])`` (or at
    ``var_floor`` itself when every feature is constant).
    """
    hp = resolve_hyperparams("gaussian_nb", hp)
    values, y = check_training_data(X, y)
    classes, yi = np.unique(y, return_inverse=True)
    floor = hp["var_floor"] * float(values.var(axis=0).max(initial=0.0))
    if floor <= 0:
        floor = hp["var_floor"]
    priors, means, variances = [], [], []
    for c in range(len(classes)):
        rows = values[yi == c]
        priors.append(len(rows) / len(values))
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), floor))
    return GaussianNbModel(priors, np.vstack(means), np.vstack(variances), classes=classes,
                           n_features=values.shape[1], hyperparams=hp, seed=seed,
                           metadata={"variance_floor": floor})
