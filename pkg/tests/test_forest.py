import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scam_radar import _kernels_py, forest, kernels
from scam_radar.errors import DegenerateDataset, InsufficientData
from scam_radar.features import N_FEATURES

try:
    from scam_radar import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def exact_split_score(x, y, thr):
    left = x <= thr
    score = Fraction(0)
    for side in (left, ~left):
        n = int(side.sum())
        a = int(y[side].sum())
        b = n - a
        score += Fraction(a * a + b * b, n)
    return score


def brute_force_best(X, y, idx, order, max_features, min_leaf):
    """Exact best score over the first ``max_features`` non-constant features, or None."""
    best = None
    seen = 0
    for f in order:
        if seen >= max_features:
            break
        col = X[idx, f]
        if col.min() == col.max():
            continue
        seen += 1
        values = np.unique(col)
        for lo, hi in zip(values[:-1], values[1:]):
            thr = (lo + hi) / 2
            n_left = int((col <= thr).sum())
            if n_left < min_leaf or len(idx) - n_left < min_leaf:
                continue
            s = exact_split_score(col, y[idx], thr)
            best = s if best is None else max(best, s)
    return best


def random_case(rng):
    n = int(rng.integers(2, 60))
    d = int(rng.integers(1, 8))
    levels = int(rng.integers(1, 6))
    X = np.ascontiguousarray(rng.integers(0, levels, size=(n, d)).astype(np.float64) * rng.choice([1.0, 0.1, 1e9]))
    y = rng.integers(0, 2, size=n).astype(np.int8)
    idx = np.sort(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=True)).astype(np.int64)
    order = rng.permutation(d).astype(np.int64)
    return X, y, idx, order, int(rng.integers(1, d + 1)), int(rng.integers(1, 4))


@pytest.mark.parametrize("seed", range(300))
def test_split_kernel_matches_brute_force(seed):
    X, y, idx, order, k, min_leaf = random_case(np.random.default_rng(seed))
    f, thr = _kernels_py.best_split(X, y, idx, order, k, min_leaf)
    best = brute_force_best(X, y, idx, order, k, min_leaf)
    if best is None:
        assert f == -1
        return
    assert f >= 0
    col = X[idx, f]
    assert col.min() <= thr < col.max()
    assert exact_split_score(col, y[idx], thr) == best


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(300))
def test_backends_agree_exactly(seed):
    X, y, idx, order, k, min_leaf = random_case(np.random.default_rng(1000 + seed))
    assert _kernels_c.best_split(X, y, idx, order, k, min_leaf) == _kernels_py.best_split(X, y, idx, order, k, min_leaf)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
def test_backends_grow_identical_forests(monkeypatch):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, N_FEATURES))
    y = (X[:, 0] + 0.5 * rng.normal(size=200) > 0).astype(np.int8)
    params = forest.Hyperparams(n_trees=10)
    monkeypatch.setattr(kernels, "best_split", _kernels_c.best_split)
    monkeypatch.setattr(kernels, "apply_tree", _kernels_c.apply_tree)
    a = forest.train(X, y, params, seed=5)
    monkeypatch.setattr(kernels, "best_split", _kernels_py.best_split)
    monkeypatch.setattr(kernels, "apply_tree", _kernels_py.apply_tree)
    b = forest.train(X, y, params, seed=5)
    assert a.to_json() == b.to_json()
    assert np.array_equal(_kernels_c.apply_tree(a.trees[0].feature, a.trees[0].threshold, a.trees[0].left,
                                                a.trees[0].right, X),
                          _kernels_py.apply_tree(a.trees[0].feature, a.trees[0].threshold, a.trees[0].left,
                                                 a.trees[0].right, X))


def separable(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, N_FEATURES))
    y = (X[:, 3] > 0).astype(np.int8)
    return X, y


def test_train_is_deterministic_and_thread_count_free():
    X, y = separable()
    params = forest.Hyperparams(n_trees=15)
    a = forest.train(X, y, params, seed=9)
    b = forest.train(X, y, params, seed=9, jobs=4)
    assert a.to_json() == b.to_json()
    assert forest.train(X, y, params, seed=10).to_json() != a.to_json()


def test_trees_fit_training_data_and_respect_depth():
    X, y = separable()
    model = forest.train(X, y, forest.Hyperparams(n_trees=20), seed=1)
    labels, scores = model.predict_many(X)
    assert (labels == y).mean() > 0.95
    assert ((scores >= 0) & (scores <= 1)).all()
    shallow = forest.train(X, y, forest.Hyperparams(n_trees=5, max_depth=2), seed=1)
    assert all(t.depth() <= 2 for t in shallow.trees)


def test_tied_vote_is_not_scam():
    X, y = separable()
    model = forest.train(X, y, forest.Hyperparams(n_trees=2), seed=0)
    votes = model.votes(X)
    labels, _ = model.predict_many(X)
    assert ((votes == 1) <= (labels == 0)).all()


def test_model_json_roundtrip():
    X, y = separable()
    model = forest.train(X, y, forest.Hyperparams(n_trees=5), seed=2)
    text = model.to_json()
    back = forest.ForestModel.from_json(text)
    assert back.to_json() == text
    assert np.array_equal(back.predict_many(X)[1], model.predict_many(X)[1])
    doc = json.loads(text)
    doc["feature_order"] = doc["feature_order"][::-1]
    with pytest.raises(ValueError):
        forest.ForestModel.from_json(json.dumps(doc))


def test_predict_single_vector():
    X, y = separable()
    model = forest.train(X, y, forest.Hyperparams(n_trees=5), seed=2)
    label, score = forest.predict(model, X[0])
    assert label in (0, 1) and 0 <= score <= 1


def test_degenerate_inputs():
    X, y = separable()
    with pytest.raises(DegenerateDataset):
        forest.train(X, np.zeros_like(y))
    with pytest.raises(DegenerateDataset):
        forest.train(X[:1], y[:1])
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        forest.train(bad, y)
    with pytest.raises(ValueError):
        forest.Hyperparams(features_per_split=0)


def test_stratified_folds_partition_and_balance():
    y = np.array([0] * 37 + [1] * 23)
    folds = forest.stratified_folds(y, 10, seed=4)
    allrows = np.sort(np.concatenate(folds))
    assert np.array_equal(allrows, np.arange(60))
    for f in folds:
        assert 3 <= int((y[f] == 0).sum()) <= 4
        assert 2 <= int((y[f] == 1).sum()) <= 3


def test_cross_validate_errors():
    X, y = separable(30)
    with pytest.raises(ValueError):
        forest.cross_validate(X, y, k=1)
    y_few = np.zeros(30, dtype=np.int8)
    y_few[:3] = 1
    with pytest.raises(InsufficientData):
        forest.cross_validate(X, y_few, k=10)


def test_cross_validate_deterministic():
    X, y = separable(100)
    params = forest.Hyperparams(n_trees=5)
    a = forest.cross_validate(X, y, params, k=5, seed=3).to_json()
    b = forest.cross_validate(X, y, params, k=5, seed=3, jobs=3).to_json()
    assert a == b
    assert a["aggregate"]["f1"] > 0.8


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metrics_definitions(tp, fp, fn, tn):
    m = forest.Metrics(tp, fp, fn, tn)
    assert 0 <= m.precision <= 1 and 0 <= m.recall <= 1 and 0 <= m.f1 <= 1
    if tp:
        assert m.f1 == pytest.approx(2 * tp / (2 * tp + fp + fn))
    else:
        assert m.f1 == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_logistic_baseline_learns_separable(seed):
    X, y = separable(80, seed)
    model = forest.LogisticBaseline().fit(X, y)
    assert (model.predict(X) == y).mean() > 0.85


@pytest.mark.parametrize("flag,want", [("1", "python"), ("0", "cython" if _kernels_c else "python")])
def test_backend_selected_at_import(flag, want):
    import os
    import subprocess
    import sys

    env = dict(os.environ, SCAM_RADAR_PURE_PYTHON=flag)
    res = subprocess.run([sys.executable, "-c", "from scam_radar import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env)
    assert res.stdout.strip() == want
