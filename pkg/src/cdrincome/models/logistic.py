"""L2-regularised logistic regression on standardised features.

Objective (``w`` weights, ``b`` unpenalised intercept, ``z = Xw + b``)::

    sum_i [log(1 + exp(z_i)) - y_i z_i] + reg_strength / 2 * ||w||^2

minimised with damped Newton steps until the gradient norm drops to
``tol`` or ``max_iter`` iterations pass.
"""
from __future__ import annotations

import time

import numpy as np
from scipy.special import expit

from ..features import FeatureMatrix
from .base import ModelError, Prediction, TrainedModel, label_array, to_prediction

TOL = 1e-6
MAX_ITER = 10_000


def _check_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) < 2:
        raise ModelError("need at least 2 labelled rows")
    if y.min() == y.max():
        raise ModelError("training labels contain a single class")
    return y


def loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, reg_strength: float) -> float:
    """Objective at ``params = [w..., b]`` for an already standardised ``X``."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * reg_strength * (w @ w))


def gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, reg_strength: float) -> np.ndarray:
    w, b = params[:-1], params[-1]
    r = expit(X @ w + b) - y
    g = np.empty_like(params)
    g[:-1] = X.T @ r + reg_strength * w
    g[-1] = r.sum()
    return g


def _hessian(params, X, reg_strength):
    w, b = params[:-1], params[-1]
    p = expit(X @ w + b)
    s = p * (1.0 - p)
    Xb = np.hstack([X, np.ones((len(X), 1))])
    H = (Xb * s[:, None]).T @ Xb
    H[np.arange(len(w)), np.arange(len(w))] += reg_strength
    return H


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and scales; constant columns get scale 0 (mapped to zero)."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # rounding in the mean leaves ~1e-17 spread on constant columns
    std[std <= 1e-12 * np.maximum(1.0, np.abs(mean))] = 0.0
    return mean, std


def _apply_scaling(X, mean, std):
    safe = np.where(std > 0, std, 1.0)
    Z = (X - mean) / safe
    Z[:, std == 0] = 0.0
    return Z


def minimize(X: np.ndarray, y: np.ndarray, reg_strength: float,
             tol: float = TOL, max_iter: int = MAX_ITER) -> tuple[np.ndarray, int]:
    params = np.zeros(X.shape[1] + 1)
    f = loss(params, X, y, reg_strength)
    for it in range(max_iter):
        g = gradient(params, X, y, reg_strength)
        if np.linalg.norm(g) <= tol:
            return params, it
        H = _hessian(params, X, reg_strength)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        slope = g @ step
        while True:
            cand = params - t * step
            f_new = loss(cand, X, y, reg_strength)
            if f_new <= f - 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            # no further decrease representable; accept the current point
            return params, it
        params, f = cand, f_new
    return params, max_iter


def lr_fit(matrix: FeatureMatrix, labels, reg_strength: float, seed: int = 0) -> TrainedModel:
    """Fit on ``matrix`` rows against 0/1 (or IncomeLabel) ``labels``.

    The Newton solver is deterministic; ``seed`` only drives tie-breaking of
    predictions scored exactly 0.5.
    """
    t0 = time.perf_counter()
    y = _check_labels(label_array(labels))
    X = np.asarray(matrix.values, dtype=np.float64)
    if len(X) != len(y):
        raise ModelError("row/label count mismatch")
    mean, std = standardize(X)
    Z = _apply_scaling(X, mean, std)
    params, n_iter = minimize(Z, y, reg_strength)
    w = params[:-1].copy()
    w[std == 0] = 0.0
    return TrainedModel(
        kind="lr",
        params={"weights": w, "intercept": float(params[-1]), "mean": mean, "scale": std,
                "n_iter": n_iter},
        hyperparams={"reg_strength": reg_strength},
        fit_time=time.perf_counter() - t0,
        columns=list(matrix.column_names),
        seed=seed,
    )


def lr_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    p = model.params
    Z = _apply_scaling(np.asarray(X, dtype=np.float64), p["mean"], p["scale"])
    return expit(Z @ p["weights"] + p["intercept"])


def lr_predict(model: TrainedModel, matrix: FeatureMatrix) -> list[Prediction]:
    model.check_columns(matrix.column_names)
    scores = lr_scores(model, matrix.values)
    return [to_prediction(u, s, model.seed) for u, s in zip(matrix.users, scores)]
