"""One-hidden-layer perceptron network for binary classification."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..errors import TrainingDivergence, UnsupportedError
from .base import TrainedModel, check_training_data, register, resolve_hyperparams


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, (fan_in, fan_out))


def forward(params: dict, X: np.ndarray):
    pre = X @ params["W1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params["W2"][:, 0] + params["b2"][0]
    return pre, hidden, logits


def loss_and_grad(params: dict, X: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Mean binary cross-entropy of the sigmoid output and its parameter gradients."""
    pre, hidden, z = forward(params, X)
    n = len(y)
    # log(1 + e^z) - y z, evaluated stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (expit(z) - y) / n
    grads = {
        "W2": hidden.T @ dz[:, None],
        "b2": np.array([dz.sum()]),
    }
    dh = np.outer(dz, params["W2"][:, 0]) * (pre > 0)
    grads["W1"] = X.T @ dh
    grads["b1"] = dh.sum(axis=0)
    return loss, grads


@register
class MlpModel(TrainedModel):
    variant = "mlp"
    multiclass = False

    def __init__(self, params: dict, **common):
        super().__init__(**common)
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def _scores(self, values):
        return expit(forward(self.params, values)[2])

    def _params_to_dict(self):
        return {k: v.tolist() for k, v in self.params.items()}

    @classmethod
    def _from_params(cls, params, **common):
        return cls({k: params[k] for k in ("W1", "b1", "W2", "b2")}, **common)


def train_mlp(X, y, hp: dict | None = None, seed: int = 0) -> MlpModel:
    """Mini-batch SGD on binary cross-entropy.

    RNG order: W1, W2 (Glorot uniform; biases start at zero), then one row
    permutation per epoch. ``metadata["loss_trace"]`` holds the mean batch loss
    of each epoch. Divergence is reported with a 1-based epoch number.
    """
    hp = resolve_hyperparams("mlp", hp)
    values, y = check_training_data(X, y)
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) > 2:
        raise UnsupportedError("mlp supports binary classification only")
    target = yi.astype(np.float64)
    n, d = values.shape
    batch = min(hp["batch_size"], n)
    rng = np.random.default_rng(int(seed))
    params = {
        "W1": glorot_uniform(rng, d, hp["hidden"]),
        "b1": np.zeros(hp["hidden"]),
        "W2": glorot_uniform(rng, hp["hidden"], 1),
        "b2": np.zeros(1),
    }
    lr = hp["learning_rate"]
    trace = []
    for epoch in range(1, hp["epochs"] + 1):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_grad(params, values[rows], target[rows])
            if not np.isfinite(loss):
                raise TrainingDivergence(epoch)
            losses.append(loss * len(rows))
            for key in params:
                params[key] -= lr * grads[key]
        trace.append(float(np.sum(losses) / n))
    return MlpModel(params, classes=classes, n_features=d, hyperparams=hp, seed=seed,
                    metadata={"loss_trace": trace, "batch_size_used": batch})
