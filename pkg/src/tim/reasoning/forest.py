"""Random forest classifier built from scratch on numpy.

Bagging with per-tree bootstrap samples, Gini impurity splits over a random
feature subset at every node, and soft voting: each leaf stores a class
distribution and the forest prediction averages the per-tree distributions.
Everything is reproducible from the constructor seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    dist: np.ndarray | None = None  # leaf class distribution, sums to 1

    def is_leaf(self) -> bool:
        return self.dist is not None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _leaf(y_idx: np.ndarray, n_classes: int) -> _Node:
    counts = np.bincount(y_idx, minlength=n_classes).astype(np.float64)
    return _Node(dist=counts / counts.sum())


def _build_tree(X: np.ndarray, y_idx: np.ndarray, n_classes: int, m_try: int,
                max_depth: int, min_samples_leaf: int,
                rng: np.random.Generator, depth: int = 0) -> _Node:
    n = len(y_idx)
    counts = np.bincount(y_idx, minlength=n_classes)
    if depth >= max_depth or n < 2 * min_samples_leaf or np.count_nonzero(counts) <= 1:
        return _leaf(y_idx, n_classes)

    parent_impurity = _gini(counts)
    features = rng.choice(X.shape[1], size=m_try, replace=False)
    best_gain = 0.0
    best_feature = -1
    best_threshold = 0.0
    for f in features:
        col = X[:, f]
        values = np.unique(col)
        if len(values) < 2:
            continue
        for threshold in (values[:-1] + values[1:]) / 2.0:
            mask = col <= threshold
            n_left = int(mask.sum())
            if n_left < min_samples_leaf or n - n_left < min_samples_leaf:
                continue
            gini_left = _gini(np.bincount(y_idx[mask], minlength=n_classes))
            gini_right = _gini(np.bincount(y_idx[~mask], minlength=n_classes))
            gain = parent_impurity - (n_left * gini_left + (n - n_left) * gini_right) / n
            if gain > best_gain:  # first best wins ties, keeping builds deterministic
                best_gain, best_feature, best_threshold = gain, int(f), float(threshold)

    if best_feature < 0:
        return _leaf(y_idx, n_classes)
    mask = X[:, best_feature] <= best_threshold
    return _Node(
        feature=best_feature,
        threshold=best_threshold,
        left=_build_tree(X[mask], y_idx[mask], n_classes, m_try, max_depth,
                         min_samples_leaf, rng, depth + 1),
        right=_build_tree(X[~mask], y_idx[~mask], n_classes, m_try, max_depth,
                          min_samples_leaf, rng, depth + 1),
    )


def _tree_proba(node: _Node, x: np.ndarray) -> np.ndarray:
    while not node.is_leaf():
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.dist


def _node_to_dict(node: _Node) -> dict:
    if node.is_leaf():
        return {"dist": [float(v) for v in node.dist]}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(doc: dict) -> _Node:
    if "dist" in doc:
        return _Node(dist=np.asarray(doc["dist"], dtype=np.float64))
    return _Node(feature=doc["feature"], threshold=doc["threshold"],
                 left=_node_from_dict(doc["left"]), right=_node_from_dict(doc["right"]))


class RandomForest:
    def __init__(self, n_trees: int = 50, max_depth: int = 12,
                 m_try: int | None = None, min_samples_leaf: int = 1, seed: int = 0):
        if n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if m_try is not None and m_try < 1:
            raise ValueError("m_try must be at least 1 when given")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.m_try = m_try
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.classes_: list[str] = []
        self._trees: list[_Node] = []

    def fit(self, X: np.ndarray, y: list[str]) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ValueError("X must be 2D with one row per label")
        self.classes_ = sorted(set(y))
        index = {c: i for i, c in enumerate(self.classes_)}
        y_idx = np.array([index[label] for label in y])
        m_try = self.m_try or max(1, int(round(np.sqrt(X.shape[1]))))
        m_try = min(m_try, X.shape[1])
        rng = np.random.default_rng(self.seed)
        self._trees = []
        for _ in range(self.n_trees):
            tree_rng = np.random.default_rng(int(rng.integers(2**63)))
            boot = tree_rng.integers(0, len(y_idx), size=len(y_idx))
            self._trees.append(_build_tree(X[boot], y_idx[boot], len(self.classes_),
                                           m_try, self.max_depth,
                                           self.min_samples_leaf, tree_rng))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self._trees:
            raise ValueError("forest is not fitted")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.zeros((len(X), len(self.classes_)))
        for i, x in enumerate(X):
            for tree in self._trees:
                out[i] += _tree_proba(tree, x)
        return out / len(self._trees)

    def predict(self, X: np.ndarray) -> list[str]:
        # argmax takes the first maximum; classes_ is sorted, so exact ties
        # resolve to the lexicographically smallest label.
        return [self.classes_[i] for i in np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {"classes": list(self.classes_),
                "n_trees": self.n_trees, "max_depth": self.max_depth,
                "m_try": self.m_try, "min_samples_leaf": self.min_samples_leaf,
                "seed": self.seed,
                "trees": [_node_to_dict(t) for t in self._trees]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomForest":
        forest = cls(doc["n_trees"], doc["max_depth"], doc["m_try"],
                     doc["min_samples_leaf"], doc["seed"])
        forest.classes_ = list(doc["classes"])
        forest._trees = [_node_from_dict(t) for t in doc["trees"]]
        return forest


def save_forest(forest: RandomForest, path) -> None:
    with open(path, "w") as fh:
        json.dump(forest.to_dict(), fh)


def load_forest(path) -> RandomForest:
    with open(path) as fh:
        return RandomForest.from_dict(json.load(fh))
