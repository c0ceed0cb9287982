"""Random forest of CART trees with Gini splits and bootstrap bagging."""
from __future__ import annotations

import math
import time

import numpy as np

from .. import kernels
from ..features import FeatureMatrix
from .base import ModelError, Prediction, TrainedModel, label_array, to_prediction


class Tree:
    """Flat array tree. Internal node ``i`` sends ``x[feature[i]] <= threshold[i]`` left."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf High-fraction for every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return self.value[node]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__slots__}


def grow_tree(X: np.ndarray, y: np.ndarray, rows: np.ndarray, max_depth: int | None,
              rng: np.random.Generator, splitter=None) -> Tree:
    """Grow one CART tree on ``X[rows]``.

    At each node the features are visited in a fresh random order and the
    best split over the first ``ceil(sqrt(d))`` non-constant ones is taken.
    Nodes stop at ``max_depth``, when pure, or with fewer than 2 rows.
    """
    splitter = splitter or kernels.best_split
    d = X.shape[1]
    k = max(1, math.ceil(math.sqrt(d)))
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    root = new_node(rows)
    stack = [(root, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        frac = value[node]
        if len(idx) < 2 or frac in (0.0, 1.0) or (max_depth is not None and depth >= max_depth):
            continue
        order = rng.permutation(d).astype(np.int64)
        f, thr, _ = splitter(X, y, idx, order, k)
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node] = int(f)
        threshold[node] = float(thr)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(feature, threshold, left, right, value)


def rf_fit(matrix: FeatureMatrix, labels, n_trees: int, max_depth: int | None, seed: int,
           bootstrap: bool = True) -> TrainedModel:
    """Bagged forest of ``n_trees`` trees; reproducible for a given ``seed``.

    ``bootstrap=False`` grows every tree on the full training set.
    """
    t0 = time.perf_counter()
    y = label_array(labels)
    X = np.ascontiguousarray(matrix.values, dtype=np.float64)
    if len(y) < 2 or len(y) != len(X):
        raise ModelError("need at least 2 labelled rows matching the matrix")
    if y.min() == y.max():
        raise ModelError("training labels contain a single class")
    if n_trees < 1:
        raise ModelError("n_trees must be >= 1")
    n = len(y)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(grow_tree(X, y, rows.astype(np.int64), max_depth, rng))
    return TrainedModel(
        kind="rf",
        params={"trees": [t.to_dict() for t in trees]},
        hyperparams={"n_trees": n_trees, "max_depth": max_depth, "bootstrap": bootstrap},
        fit_time=time.perf_counter() - t0,
        columns=list(matrix.column_names),
        seed=seed,
    )


def _trees(model: TrainedModel) -> list[Tree]:
    cached = model.params.get("_tree_objs")
    if cached is None:
        cached = [Tree(**t) for t in model.params["trees"]]
        model.params["_tree_objs"] = cached
    return cached


def rf_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    trees = _trees(model)
    total = np.zeros(len(X))
    for t in trees:
        total += t.apply(X)
    return total / len(trees)


def rf_predict(model: TrainedModel, matrix: FeatureMatrix) -> list[Prediction]:
    model.check_columns(matrix.column_names)
    scores = rf_scores(model, matrix.values)
    return [to_prediction(u, s, model.seed) for u, s in zip(matrix.users, scores)]
