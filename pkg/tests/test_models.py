import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.optimize import brentq
from hypothesis import strategies as st

from cdrincome.features import FeatureMatrix
from cdrincome.graph import GroundTruth, TruthPartition
from cdrincome.models import (HomophilyParams, HyperGrid, ModelError, bayes_fit, bayes_posterior,
                              dump_model, grid_search_cv, load_model, lr_fit, lr_predict,
                              majority_vote, random_select, rf_fit, rf_predict, rf_scores,
                              stratified_folds)
from cdrincome.models.base import TrainedModel, coin, to_prediction
from cdrincome.models.logistic import _apply_scaling, gradient, loss, lr_scores

from conftest import H, L, make_graph


def _matrix(X, users=None):
    X = np.asarray(X, dtype=float)
    users = users or [f"r{i:04d}" for i in range(len(X))]
    return FeatureMatrix([f"x{j}" for j in range(X.shape[1])], users, X)


# --- prediction rule -------------------------------------------------------

def test_label_rule():
    assert to_prediction("a", 0.51, 0).label is H
    assert to_prediction("a", 0.49, 0).label is L
    assert to_prediction("a", 0.5, 0).label is coin(0, "a")
    labels = {coin(s, "node") for s in range(40)}
    assert labels == {H, L}


# --- random selection ------------------------------------------------------

def test_random_select_balanced():
    preds = random_select([f"n{i}" for i in range(10_000)], seed=3)
    frac = sum(p.label is H for p in preds) / len(preds)
    assert 0.47 <= frac <= 0.53
    assert all(p.score in (0.0, 1.0) for p in preds)


def test_random_select_deterministic_and_empty():
    nodes = [f"n{i}" for i in range(100)]
    assert random_select(nodes, 9) == random_select(nodes, 9)
    assert random_select(nodes, 9) != random_select(nodes, 10)
    assert random_select([], 1) == []


# --- majority voting -------------------------------------------------------

def _star(neigh_labels, feature=True):
    names = [f"w{i}" for i in range(len(neigh_labels))]
    g = make_graph(calls=[("v", w) for w in names])
    truth = GroundTruth(dict(zip(names, neigh_labels)))
    part = TruthPartition(frozenset(names) if feature else frozenset(), frozenset(), 0)
    return g, truth, part


def test_majority_strict():
    g, truth, part = _star([H, H, L])
    p = majority_vote(g, "v", part, truth, seed=0)
    assert p.label is H and p.score == pytest.approx(2 / 3)


def test_majority_tie_is_seeded():
    g, truth, part = _star([H, L])
    p = majority_vote(g, "v", part, truth, seed=5)
    assert p.score == 0.5 and p.label is coin(5, "v")


def test_majority_no_labelled_neighbours():
    g, truth, part = _star([H, H], feature=False)
    p = majority_vote(g, "v", part, truth, seed=1)
    assert p.score == 0.5 and p.label is coin(1, "v")


def test_majority_ignores_direction_and_duplicates():
    g = make_graph(calls=[("v", "a"), ("a", "v"), ("b", "v")])
    truth = GroundTruth({"a": H, "b": L})
    part = TruthPartition(frozenset({"a", "b"}), frozenset(), 0)
    assert majority_vote(g, "v", part, truth, 0).score == 0.5


# --- Bayesian method -------------------------------------------------------

def _labelled(edges, labels):
    g = make_graph(calls=edges)
    truth = GroundTruth(labels)
    return g, truth, TruthPartition(frozenset(labels), frozenset(), 0)


def test_bayes_fit_homophilous():
    g, truth, part = _labelled([("h1", "h2"), ("l1", "l2")], {"h1": H, "h2": H, "l1": L, "l2": L})
    p = bayes_fit(g, truth, part)
    assert p.beta_high == 1 - 1e-6 and p.beta_low == 1e-6 and p.prior_high == 0.5


def test_bayes_fit_counts():
    # edges H-H, H-L, L-L, L-L
    g, truth, part = _labelled(
        [("h1", "h2"), ("h1", "l1"), ("l1", "l2"), ("l2", "l3")],
        {"h1": H, "h2": H, "l1": L, "l2": L, "l3": L})
    p = bayes_fit(g, truth, part)
    assert p.beta_high == pytest.approx(0.5)
    assert p.beta_low == pytest.approx(1 / 3)
    assert p.prior_high == pytest.approx(2 / 5)


def test_bayes_fit_reciprocal_edges_count_once():
    g, truth, part = _labelled([("h1", "h2"), ("h2", "h1"), ("h1", "l1")], {"h1": H, "h2": H, "l1": L})
    assert bayes_fit(g, truth, part).beta_high == pytest.approx(0.5)


def test_bayes_fit_degenerate_falls_back_to_prior():
    g, truth, part = _labelled([("h1", "x"), ("l1", "y")], {"h1": H, "l1": L})
    p = bayes_fit(g, truth, part)
    assert p.beta_high == p.beta_low == p.prior_high == 0.5


def test_bayes_fit_needs_both_labels():
    g, truth, part = _labelled([("h1", "h2")], {"h1": H, "h2": H})
    with pytest.raises(ModelError):
        bayes_fit(g, truth, part)


def test_bayes_posterior_examples():
    p = HomophilyParams(0.7, 0.3, 0.5)
    assert bayes_posterior(p, 0, 0) == pytest.approx(0.5)
    assert bayes_posterior(HomophilyParams(0.7, 0.3, 0.2), 0, 0) == pytest.approx(0.2)
    assert bayes_posterior(p, 2, 0) == pytest.approx(0.49 / 0.58, abs=1e-12)
    assert bayes_posterior(p, 1, 1) == pytest.approx(0.5)


def test_bayes_posterior_extreme_counts_stay_finite():
    p = HomophilyParams(1 - 1e-6, 1e-6, 0.5)
    assert bayes_posterior(p, 5000, 0) == 1.0
    assert bayes_posterior(p, 0, 5000) == 0.0


probs = st.floats(1e-6, 1 - 1e-6)


@settings(max_examples=200, deadline=None)
@given(probs, probs, probs, st.integers(0, 40), st.integers(0, 40))
def test_bayes_posterior_monotone(bh, bl, pi, nh, nl):
    if bh <= bl:
        bh, bl = bl, bh
    if bh == bl:
        return
    p = HomophilyParams(bh, bl, pi)
    s = bayes_posterior(p, nh, nl)
    assert 0.0 <= s <= 1.0
    assert bayes_posterior(p, nh + 1, nl) >= s
    assert bayes_posterior(p, nh, nl + 1) <= s


# --- logistic regression ---------------------------------------------------

def test_lr_one_dimensional_separable():
    m = lr_fit(_matrix([[-1.0], [1.0]]), [L, H], reg_strength=0.01)
    s = lr_scores(m, np.array([[1.0]]))[0]
    # symmetric optimum w solves 2 * (1 - sigmoid(w)) = 0.01 * w
    w = brentq(lambda t: 0.01 * t - 2 * (1 - 1 / (1 + math.exp(-t))), 0.0, 100.0, xtol=1e-14)
    assert s > 0.9
    assert s == pytest.approx(1 / (1 + math.exp(-w)), abs=1e-6)


def test_lr_constant_column_gets_zero_weight(rng):
    X = np.column_stack([rng.normal(size=40), np.zeros(40), np.full(40, 0.1)])
    y = (X[:, 0] + 0.3 * rng.normal(size=40) > 0).astype(int)
    m = lr_fit(_matrix(X), y, 1.0)
    assert m.params["weights"][1] == 0.0 and m.params["weights"][2] == 0.0


def test_lr_gradient_matches_finite_differences(rng):
    X = rng.normal(size=(30, 5))
    y = rng.integers(0, 2, 30).astype(float)
    w = rng.normal(size=6)
    h = 1e-5
    fd = np.array([(loss(w + h * e, X, y, 0.7) - loss(w - h * e, X, y, 0.7)) / (2 * h)
                   for e in np.eye(6)])
    assert np.max(np.abs(fd - gradient(w, X, y, 0.7))) <= 1e-4


def test_lr_converges_to_stationary_point(rng):
    X = rng.normal(size=(60, 4))
    y = (X @ [1, -2, 0.5, 0] + rng.normal(size=60) > 0).astype(int)
    m = lr_fit(_matrix(X), y, 0.1)
    p = m.params
    Z = _apply_scaling(X, p["mean"], p["scale"])
    g = gradient(np.append(p["weights"], p["intercept"]), Z, y.astype(float), 0.1)
    assert np.linalg.norm(g) <= 1e-6


def test_lr_zero_weights_score_half():
    m = TrainedModel("lr", params={"weights": np.zeros(2), "intercept": 0.0,
                                   "mean": np.zeros(2), "scale": np.ones(2)}, columns=["x0", "x1"])
    preds = lr_predict(m, _matrix(np.random.default_rng(0).normal(size=(5, 2))))
    assert all(p.score == 0.5 for p in preds)


def test_lr_training_accuracy_beats_constant(rng):
    X = rng.normal(size=(80, 3))
    y = (X[:, 0] - X[:, 2] + rng.normal(size=80) > 0.3).astype(int)
    m = lr_fit(_matrix(X), y, 1.0)
    acc = np.mean([int(p.label) for p in lr_predict(m, _matrix(X))] == y)
    assert acc >= max(y.mean(), 1 - y.mean())


def test_lr_monotone_in_positive_weight(rng):
    X = rng.normal(size=(50, 2))
    y = (X[:, 0] > 0).astype(int)
    m = lr_fit(_matrix(X), y, 1.0)
    assert m.params["weights"][0] > 0
    grid = np.column_stack([np.linspace(-3, 3, 20), np.zeros(20)])
    assert np.all(np.diff(lr_scores(m, grid)) > 0)


def test_lr_rescaling_invariance(rng):
    X = rng.normal(size=(70, 3))
    y = (X @ [1, 1, -1] + rng.normal(size=70) > 0).astype(int)
    base = [p.label for p in lr_predict(lr_fit(_matrix(X), y, 0.5), _matrix(X))]
    Xs = X * np.array([1000.0, 0.001, 7.0])
    scaled = [p.label for p in lr_predict(lr_fit(_matrix(Xs), y, 0.5), _matrix(Xs))]
    assert base == scaled


def test_lr_errors(rng):
    X = _matrix(rng.normal(size=(5, 2)))
    with pytest.raises(ModelError):
        lr_fit(X, [1] * 5, 1.0)
    m = lr_fit(X, [0, 1, 0, 1, 1], 1.0)
    other = FeatureMatrix(["y0", "y1"], X.users, X.values)
    with pytest.raises(ModelError):
        lr_predict(m, other)


def test_lr_deterministic(rng):
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    a, b = lr_fit(_matrix(X), y, 0.3, seed=4), lr_fit(_matrix(X), y, 0.3, seed=4)
    np.testing.assert_array_equal(a.params["weights"], b.params["weights"])


# --- random forest ---------------------------------------------------------

def _xor(n, rng):
    X = rng.uniform(-1, 1, size=(n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return X, y


def test_rf_single_tree_memorises(rng):
    X = rng.normal(size=(60, 5))
    y = rng.integers(0, 2, 60)
    m = rf_fit(_matrix(X), y, n_trees=1, max_depth=None, seed=0, bootstrap=False)
    pred = [int(p.label) for p in rf_predict(m, _matrix(X))]
    assert np.mean(np.array(pred) == y) == 1.0


def test_rf_xor_beats_lr(rng):
    Xtr, ytr = _xor(400, rng)
    Xte, yte = _xor(400, rng)
    rf = rf_fit(_matrix(Xtr), ytr, n_trees=200, max_depth=None, seed=1)
    rf_acc = np.mean((rf_scores(rf, Xte) > 0.5) == yte)
    lr = lr_fit(_matrix(Xtr), ytr, 1.0)
    lr_acc = np.mean((lr_scores(lr, Xte) > 0.5) == yte)
    assert rf_acc >= 0.9
    assert abs(lr_acc - 0.5) < 0.15


def test_rf_deterministic(rng):
    X, y = _xor(100, rng)
    a = rf_fit(_matrix(X), y, 10, 5, seed=3)
    b = rf_fit(_matrix(X), y, 10, 5, seed=3)
    np.testing.assert_array_equal(rf_scores(a, X), rf_scores(b, X))
    c = rf_fit(_matrix(X), y, 10, 5, seed=4)
    assert not np.array_equal(rf_scores(a, X), rf_scores(c, X))


def test_rf_single_tree_score_is_leaf_fraction(rng):
    X, y = _xor(80, rng)
    m = rf_fit(_matrix(X), y, 1, 2, seed=0)
    scores = rf_scores(m, X)
    tree = m.params["_tree_objs"][0]
    leaves = set(tree.value[tree.feature < 0].tolist())
    assert set(scores.tolist()) <= leaves


def test_rf_unanimous_and_bounded(rng):
    X = np.vstack([rng.normal(-5, 0.1, size=(20, 2)), rng.normal(5, 0.1, size=(20, 2))])
    y = np.array([0] * 20 + [1] * 20)
    m = rf_fit(_matrix(X), y, 25, None, seed=2)
    s = rf_scores(m, X)
    assert np.all((s >= 0) & (s <= 1))
    assert rf_scores(m, np.array([[5.0, 5.0]]))[0] == 1.0


def test_rf_max_depth_respected(rng):
    X, y = _xor(200, rng)
    m = rf_fit(_matrix(X), y, 5, 2, seed=0)
    rf_scores(m, X)
    for t in m.params["_tree_objs"]:
        assert t.n_nodes <= 7


def test_rf_errors(rng):
    X = _matrix(rng.normal(size=(6, 2)))
    with pytest.raises(ModelError):
        rf_fit(X, [0] * 6, 3, None, 0)
    m = rf_fit(X, [0, 1, 0, 1, 0, 1], 3, None, 0)
    with pytest.raises(ModelError):
        rf_predict(m, FeatureMatrix(["a", "b"], X.users, X.values))


def test_model_dump_load_round_trip(tmp_path, rng):
    X, y = _xor(60, rng)
    for m in (rf_fit(_matrix(X), y, 4, 3, seed=0), lr_fit(_matrix(X), y, 0.5)):
        path = tmp_path / f"{m.kind}.json"
        dump_model(m, path)
        back = load_model(path)
        assert back.kind == m.kind and back.columns == m.columns
        assert back.hyperparams == m.hyperparams
        np.testing.assert_array_equal(
            rf_scores(back, X) if m.kind == "rf" else lr_scores(back, X),
            rf_scores(m, X) if m.kind == "rf" else lr_scores(m, X))


def test_load_rejects_unknown_version(tmp_path):
    m = TrainedModel("random", seed=1)
    dump_model(m, tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text().replace('"version": 1', '"version": 99')
    (tmp_path / "m.json").write_text(text)
    with pytest.raises(ModelError):
        load_model(tmp_path / "m.json")


# --- grid search -----------------------------------------------------------

def test_folds_stratified_and_disjoint():
    y = np.array([0] * 23 + [1] * 17)
    folds = stratified_folds(y, 5, seed=0)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(40))
    for f in folds:
        assert abs(y[f].sum() - len(f) * 17 / 40) <= 1


def test_folds_need_k_per_class():
    with pytest.raises(ModelError):
        stratified_folds([0] * 10 + [1] * 4, 5, 0)


def test_singleton_grid_equals_direct_fit(rng):
    X = rng.normal(size=(50, 3))
    y = (X[:, 0] > 0).astype(int)
    grid = HyperGrid(lr_reg_strength=[0.3], rf_n_trees=[7], rf_max_depth=[3], seed=2)
    g_lr = grid_search_cv(_matrix(X), y, "lr", grid)
    np.testing.assert_allclose(g_lr.params["weights"], lr_fit(_matrix(X), y, 0.3).params["weights"])
    g_rf = grid_search_cv(_matrix(X), y, "rf", grid)
    np.testing.assert_array_equal(rf_scores(g_rf, X), rf_scores(rf_fit(_matrix(X), y, 7, 3, seed=2), X))


def test_grid_winner_is_best(rng):
    X = rng.normal(size=(60, 4))
    y = (X[:, 0] + X[:, 1] ** 2 > 0.8).astype(int)
    grid = HyperGrid(rf_n_trees=[5, 10], rf_max_depth=[1, 4, None], seed=0)
    m = grid_search_cv(_matrix(X), y, "rf", grid)
    scores = [r["mean_accuracy"] for r in m.cv_results]
    winner = next(r for r in m.cv_results if r["params"] == {
        "n_trees": m.hyperparams["n_trees"], "max_depth": m.hyperparams["max_depth"]})
    assert all(winner["mean_accuracy"] >= s for s in scores)
    first_best = scores.index(max(scores))
    assert m.cv_results[first_best] is winner
    assert len(m.params["oof_scores"]) == 60


def test_grid_search_too_few_rows(rng):
    with pytest.raises(ModelError):
        grid_search_cv(_matrix(rng.normal(size=(8, 2))), [0, 1] * 4, "lr", HyperGrid())
