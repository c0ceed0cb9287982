"""Stratified k-fold cross-validation and grid search for LR and RF."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, TrainedModel, label_array, to_prediction
from .forest import rf_fit, rf_scores
from .logistic import lr_fit, lr_scores


@dataclass
class HyperGrid:
    lr_reg_strength: list[float] = field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0])
    rf_n_trees: list[int] = field(default_factory=lambda: [50, 100, 200])
    rf_max_depth: list[int | None] = field(default_factory=lambda: [8, 16, None])
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.lr_reg_strength and self.rf_n_trees and self.rf_max_depth):
            raise ValueError("hyperparameter grids must be non-empty")

    def points(self, kind: str) -> list[dict[str, Any]]:
        """Grid points in declared order (first listed axis varies slowest)."""
        if kind == "lr":
            return [{"reg_strength": c} for c in self.lr_reg_strength]
        if kind == "rf":
            return [{"n_trees": t, "max_depth": d}
                    for t, d in itertools.product(self.rf_n_trees, self.rf_max_depth)]
        raise ValueError(f"grid search supports 'lr' and 'rf', not {kind!r}")

    @classmethod
    def from_dict(cls, doc: dict[str, Any], seed: int = 0) -> "HyperGrid":
        lr = doc.get("lr", {})
        rf = doc.get("rf", {})
        defaults = cls()
        return cls(
            lr_reg_strength=[float(c) for c in lr.get("reg_strength", defaults.lr_reg_strength)],
            rf_n_trees=[int(t) for t in rf.get("n_trees", defaults.rf_n_trees)],
            rf_max_depth=[None if d is None else int(d) for d in rf.get("max_depth", defaults.rf_max_depth)],
            seed=seed,
        )

    def to_dict(self) -> dict[str, Any]:
        return {"lr": {"reg_strength": self.lr_reg_strength},
                "rf": {"n_trees": self.rf_n_trees, "max_depth": self.rf_max_depth}}


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Validation index arrays for ``k`` stratified folds.

    Each class is shuffled and dealt round-robin; the dealing offset carries
    over between classes so fold sizes differ by at most one.
    """
    y = label_array(y)
    counts = np.bincount(y, minlength=2)
    if counts.min() < k:
        raise ModelError(f"each class needs at least {k} rows for {k}-fold CV, got {counts.tolist()}")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        members = members[rng.permutation(len(members))]
        for j, i in enumerate(members.tolist()):
            buckets[(offset + j) % k].append(i)
        offset = (offset + len(members)) % k
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


def _fit(kind, matrix, y, point, seed):
    if kind == "lr":
        return lr_fit(matrix, y, point["reg_strength"], seed)
    return rf_fit(matrix, y, point["n_trees"], point["max_depth"], seed)


def _scores(model, X):
    return lr_scores(model, X) if model.kind == "lr" else rf_scores(model, X)


def _subset(matrix: FeatureMatrix, idx: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(matrix.column_names, [matrix.users[i] for i in idx], matrix.values[idx])


def grid_search_cv(matrix: FeatureMatrix, labels, kind: str, grid: HyperGrid,
                   k: int = 5, seed: int | None = None) -> TrainedModel:
    """Pick the grid point with the best mean fold accuracy and refit on all rows.

    Ties go to the earliest point in declared order. ``cv_results`` keeps
    one entry per point with its per-fold accuracies; the returned model also
    carries out-of-fold scores of the winner under ``params['oof_scores']``.
    Folds are drawn from ``grid.seed``; models are seeded with ``seed``
    (defaulting to ``grid.seed``).
    """
    t0 = time.perf_counter()
    model_seed = grid.seed if seed is None else seed
    y = label_array(labels)
    folds = stratified_folds(y, k, grid.seed)
    all_idx = np.arange(len(y))
    points = grid.points(kind)
    results = []
    oof_by_point = []
    for point in points:
        accs = []
        oof = np.empty(len(y))
        for vi in folds:
            ti = np.setdiff1d(all_idx, vi, assume_unique=True)
            # folds never share rows; validation rows are never trained on
            assert np.intersect1d(ti, vi).size == 0
            model = _fit(kind, _subset(matrix, ti), y[ti], point, model_seed)
            s = _scores(model, matrix.values[vi])
            oof[vi] = s
            pred = np.array([int(to_prediction(matrix.users[i], v, model_seed).label)
                             for i, v in zip(vi.tolist(), s)])
            accs.append(float(np.mean(pred == y[vi])))
        results.append({"params": dict(point), "fold_accuracy": accs,
                        "mean_accuracy": float(np.mean(accs))})
        oof_by_point.append(oof)
    best = max(range(len(points)), key=lambda i: (results[i]["mean_accuracy"], -i))
    model = _fit(kind, matrix, y, points[best], model_seed)
    model.cv_results = results
    model.params["oof_scores"] = oof_by_point[best]
    model.params["oof_users"] = list(matrix.users)
    model.fit_time = time.perf_counter() - t0
    return model
