"""CART decision trees (Gini impurity) and bagged random forests."""

from __future__ import annotations

import math

import numpy as np

from .base import TrainedModel, check_training_data, register, resolve_hyperparams


class Tree:
    """Flat-array binary tree; ``feature == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = np.arange(len(X))
        while len(active):
            f = self.feature[node[active]]
            internal = f >= 0
            active, f = active[internal], f[internal]
            cur = node[active]
            go_left = X[active, f] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        tree = cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])
        n = tree.n_nodes
        if not (len(tree.threshold) == len(tree.left) == len(tree.right) == len(tree.value) == n):
            raise ValueError("tree arrays have inconsistent lengths")
        return tree


_TIE_EPS = 1e-12


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features):
    """Exhaustive Gini split search over the given feature indices.

    Candidate thresholds are midpoints between adjacent distinct sorted values.
    Returns ``(feature, threshold, weighted_gini)`` or ``None`` when no
    feature has two distinct values. Ties (within 1e-12) keep the earliest
    feature, then the lowest threshold.
    """
    m = len(y)
    onehot = np.eye(n_classes)[y]
    total = onehot.sum(axis=0)
    nl = np.arange(1, m, dtype=np.float64)
    nr = m - nl
    best = None
    for f in features:
        x = X[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        cl = np.cumsum(onehot[order], axis=0)[:-1]
        cr = total - cl
        # n * weighted gini = nl - sum(cl^2)/nl + nr - sum(cr^2)/nr
        imp = (m - (cl * cl).sum(axis=1) / nl - (cr * cr).sum(axis=1) / nr) / m
        imp[~valid] = np.inf
        # Exact ties can differ by rounding; treat near-equal values as ties.
        i = int(np.flatnonzero(imp <= imp.min() + _TIE_EPS)[0])
        if best is None or imp[i] < best[2] - _TIE_EPS:
            lo, hi = xs[i], xs[i + 1]
            thr = lo + (hi - lo) / 2.0
            if not (lo <= thr < hi):
                thr = lo
            best = (int(f), float(thr), float(imp[i]))
    return best


def build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_depth: int,
               min_samples_split: int, max_features: int | None = None,
               rng: np.random.Generator | None = None) -> Tree:
    """Grow a CART tree depth-first, left child before right.

    With ``max_features`` below the feature count, each node draws that many
    candidate features (sorted) from ``rng``; if none yields a valid split the
    remaining features are searched too.
    """
    d = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        counts = np.bincount(y[rows], minlength=n_classes).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    root_rows = np.arange(len(y))
    stack = [(new_node(root_rows), root_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        labels = y[rows]
        if depth >= max_depth or len(rows) < min_samples_split or (labels == labels[0]).all():
            continue
        Xn = X[rows]
        if max_features is None or max_features >= d:
            split = best_split(Xn, labels, n_classes, range(d))
        else:
            chosen = np.sort(rng.choice(d, size=max_features, replace=False))
            split = best_split(Xn, labels, n_classes, chosen)
            if split is None:
                rest = np.setdiff1d(np.arange(d), chosen)
                split = best_split(Xn, labels, n_classes, rest)
        if split is None:
            continue
        f, thr, _ = split
        mask = Xn[:, f] <= thr
        lrows, rrows = rows[mask], rows[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(feature, threshold, left, right, np.vstack(value))


@register
class DecisionTreeModel(TrainedModel):
    variant = "decision_tree"

    def __init__(self, tree: Tree, **common):
        super().__init__(**common)
        self.tree = tree

    def predict_proba(self, X) -> np.ndarray:
        return self.tree.predict_proba(self._check(X))

    def _predict_index(self, values):
        return np.argmax(self.tree.predict_proba(values), axis=1)

    def _scores(self, values):
        return self.tree.predict_proba(values)[:, 1]

    def _params_to_dict(self):
        return {"tree": self.tree.to_dict()}

    @classmethod
    def _from_params(cls, params, **common):
        return cls(Tree.from_dict(params["tree"]), **common)


@register
class RandomForestModel(TrainedModel):
    """Majority vote over trees; the score is the mean leaf probability.

    With pure leaves (the default unlimited-depth regime) the score equals the
    positive vote fraction, so thresholding it at 0.5 reproduces the vote.
    """

    variant = "random_forest"

    def __init__(self, trees: list[Tree], **common):
        super().__init__(**common)
        self.trees = list(trees)

    def predict_proba(self, X) -> np.ndarray:
        values = self._check(X)
        return np.mean([t.predict_proba(values) for t in self.trees], axis=0)

    def _predict_index(self, values):
        votes = np.zeros((len(values), len(self.classes)), dtype=np.int64)
        rows = np.arange(len(values))
        for t in self.trees:
            votes[rows, np.argmax(t.predict_proba(values), axis=1)] += 1
        return np.argmax(votes, axis=1)

    def _scores(self, values):
        return np.mean([t.predict_proba(values)[:, 1] for t in self.trees], axis=0)

    def _params_to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def _from_params(cls, params, **common):
        return cls([Tree.from_dict(t) for t in params["trees"]], **common)


def train_decision_tree(X, y, hp: dict | None = None, seed: int = 0) -> DecisionTreeModel:
    hp = resolve_hyperparams("decision_tree", hp)
    values, y = check_training_data(X, y)
    classes, yi = np.unique(y, return_inverse=True)
    tree = build_tree(values, yi, len(classes), hp["max_depth"], hp["min_samples_split"])
    return DecisionTreeModel(tree, classes=classes, n_features=values.shape[1],
                             hyperparams=hp, seed=seed,
                             metadata={"n_nodes": tree.n_nodes, "depth": tree.depth})


def train_random_forest(X, y, hp: dict | None = None, seed: int = 0) -> RandomForestModel:
    """Bagged CART ensemble.

    Tree ``i`` draws from ``default_rng([seed, i])``: bootstrap indices first
    (when enabled), then per-node feature subsets in depth-first order.
    """
    hp = resolve_hyperparams("random_forest", hp)
    values, y = check_training_data(X, y)
    classes, yi = np.unique(y, return_inverse=True)
    n, d = values.shape
    mf = hp["max_features"]
    if mf == "sqrt":
        mf = math.ceil(math.sqrt(d))
    elif mf is None:
        mf = d
    mf = min(int(mf), d)
    trees = []
    for i in range(hp["n_trees"]):
        rng = np.random.default_rng([int(seed), i])
        rows = rng.integers(0, n, n) if hp["bootstrap"] else np.arange(n)
        trees.append(build_tree(values[rows], yi[rows], len(classes), hp["max_depth"],
                                hp["min_samples_split"], mf, rng))
    return RandomForestModel(trees, classes=classes, n_features=d, hyperparams=hp, seed=seed,
                             metadata={"max_features_used": mf,
                                       "total_nodes": sum(t.n_nodes for t in trees)})
