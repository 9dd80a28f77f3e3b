"""Six classifiers behind one train / predict / predict_score contract."""

from .base import (DEFAULT_HYPERPARAMS, SHORT_NAMES, VARIANTS, TrainedModel, load_model,
                   model_from_dict, resolve_hyperparams)
from .knn import KnnModel, train_knn
from .mlp import MlpModel, train_mlp
from .naive_bayes import GaussianNbModel, train_gaussian_nb
from .svc import LinearSvcModel, train_linear_svc
from .tree import DecisionTreeModel, RandomForestModel, train_decision_tree, train_random_forest

TRAINERS = {
    "decision_tree": train_decision_tree,
    "random_forest": train_random_forest,
    "knn": train_knn,
    "gaussian_nb": train_gaussian_nb,
    "mlp": train_mlp,
    "linear_svc": train_linear_svc,
}


def train(variant: str, X, y, hp: dict | None = None, seed: int = 0) -> TrainedModel:
    resolve_hyperparams(variant, hp)
    return TRAINERS[variant](X, y, hp, seed)


def predict(model: TrainedModel, X):
    return model.predict(X)


def predict_score(model: TrainedModel, X):
    return model.predict_score(X)


__all__ = [
    "DEFAULT_HYPERPARAMS", "SHORT_NAMES", "VARIANTS", "TRAINERS", "TrainedModel",
    "load_model", "model_from_dict", "resolve_hyperparams", "train", "predict",
    "predict_score", "train_decision_tree", "train_random_forest", "train_knn",
    "train_gaussian_nb", "train_mlp", "train_linear_svc", "DecisionTreeModel",
    "RandomForestModel", "KnnModel", "GaussianNbModel", "MlpModel", "LinearSvcModel",
]
