"""Linear support vector classifier trained by stochastic subgradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, UnsupportedError
from .base import TrainedModel, check_training_data, register, resolve_hyperparams


def svm_objective(w: np.ndarray, Xa: np.ndarray, ypm: np.ndarray, lam: float) -> float:
    """lam/2 |w|^2 + mean hinge loss, on bias-augmented inputs."""
    margins = ypm * (Xa @ w)
    return float(0.5 * lam * (w @ w) + np.mean(np.maximum(0.0, 1.0 - margins)))


@register
class LinearSvcModel(TrainedModel):
    """Prediction is ``w.x + b > 0``; the score is the signed margin."""

    variant = "linear_svc"
    threshold = 0.0
    multiclass = False

    def __init__(self, weights, bias: float, **common):
        super().__init__(**common)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)

    def _scores(self, values):
        return values @ self.weights + self.bias

    def _params_to_dict(self):
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def _from_params(cls, params, **common):
        return cls(params["weights"], params["bias"], **common)


def train_linear_svc(X, y, hp: dict | None = None, seed: int = 0) -> LinearSvcModel:
    """Pegasos-style training with step ``1/(lam t)``.

    The bias is learned as the weight of a constant input equal to
    ``intercept_scaling``. With ``project`` the iterate is projected onto the
    ball of radius ``1/sqrt(lam)``. The returned weights are the running
    average of all iterates; ``metadata["objective_trace"]`` holds the
    objective of that average after each epoch. RNG order: one permutation
    per epoch.
    """
    hp = resolve_hyperparams("linear_svc", hp)
    values, y = check_training_data(X, y)
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise DataError("linear_svc needs both classes present")
    if len(classes) > 2:
        raise UnsupportedError("linear_svc supports binary classification only")
    n, d = values.shape
    lam = float(hp["lam"])
    Xa = np.hstack([values, np.full((n, 1), float(hp["intercept_scaling"]))])
    ypm = np.where(yi == 1, 1.0, -1.0)
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(int(seed))
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    t = 0
    trace = []
    rows_x = [Xa[i] for i in range(n)]
    for _ in range(hp["epochs"]):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x = rows_x[i]
            violated = ypm[i] * (w @ x) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += (eta * ypm[i]) * x
            if hp["project"]:
                norm = np.sqrt(w @ w)
                if norm > radius:
                    w *= radius / norm
            avg += (w - avg) / t
        trace.append(svm_objective(avg, Xa, ypm, lam))
    scale = float(hp["intercept_scaling"])
    return LinearSvcModel(avg[:d].copy(), avg[d] * scale, classes=classes, n_features=d,
                          hyperparams=hp, seed=seed, metadata={"objective_trace": trace})
