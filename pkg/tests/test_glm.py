import json
import math
import warnings

import numpy as np
import pytest

from lobjump.glm import (
    ConvergenceWarning,
    FitConfig,
    choose_lambda,
    cross_validate,
    fit_path,
    grad_nll,
    kkt_residuals,
    make_folds,
    nll,
    write_fit_meta,
    write_path,
)
from oracles import prox_grad_lasso


def logistic_data(rng, N, p, beta=None, b0=-0.3, scale=None):
    X = rng.normal(size=(N, p))
    if scale is not None:
        X = X * scale
    beta = rng.normal(size=p) if beta is None else np.asarray(beta, dtype=float)
    prob = 1 / (1 + np.exp(-(b0 + X @ beta)))
    y = (rng.random(N) < prob).astype(int)
    return X, y


def test_nll_at_zero(rng):
    X = np.column_stack([np.ones(30), rng.normal(size=(30, 3))])
    y = rng.integers(0, 2, 30)
    assert nll(np.zeros(4), X, y) == pytest.approx(30 * math.log(2), rel=1e-14)
    np.testing.assert_allclose(grad_nll(np.zeros(4), X, y), (0.5 - y) @ X, rtol=1e-13)


def test_grad_finite_differences(rng):
    X = np.column_stack([np.ones(50), rng.normal(size=(50, 8))])
    y = rng.integers(0, 2, 50)
    beta = rng.normal(scale=0.5, size=9)
    h = 1e-5
    fd = np.array([(nll(beta + h * e, X, y) - nll(beta - h * e, X, y)) / (2 * h) for e in np.eye(9)])
    g = grad_nll(beta, X, y)
    assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


def test_nll_stable_for_large_margins():
    X = np.array([[1.0], [1.0]])
    y = np.array([1, 0])
    v = nll(np.array([500.0]), X, y)
    assert np.isfinite(v) and v == pytest.approx(500.0)
    assert np.all(np.isfinite(grad_nll(np.array([-500.0]), X, y)))


def test_non_binary_labels_rejected():
    with pytest.raises(ValueError):
        nll(np.zeros(1), np.ones((2, 1)), np.array([0, 2]))


def test_null_model_at_lambda_max(rng):
    X, y = logistic_data(rng, 150, 6)
    path = fit_path(X, y)
    assert np.all(path.coefs[0] == 0.0)
    assert path.intercepts[0] == pytest.approx(math.log(y.mean() / (1 - y.mean())))
    assert path.n_nonzero[-1] >= path.n_nonzero[0]
    # slightly below lambda_max the first variable enters
    assert path.n_nonzero[1] >= 1


def test_kkt_along_path(rng):
    X, y = logistic_data(rng, 300, 12, scale=rng.uniform(0.1, 10, 12))
    path = fit_path(X, y)
    assert path.converged.all()
    for k, lam in enumerate(path.lambdas):
        r = kkt_residuals(X, y, path.intercepts[k], path.coefs[k], lam, path.penalty_factor)
        assert r.max() < 1e-6, k


def test_matches_proximal_gradient_oracle(rng):
    X, y = logistic_data(rng, 200, 5, beta=[1.0, -0.5, 0.0, 0.3, 0.0])
    path = fit_path(X, y)
    for k in (5, 30, 80):
        b0, b = prox_grad_lasso(X, y, path.lambdas[k], path.penalty_factor)
        assert abs(path.intercepts[k] - b0) < 1e-4
        np.testing.assert_allclose(path.coefs[k], b, atol=1e-4)


def test_unstandardized_matches_oracle(rng):
    X, y = logistic_data(rng, 200, 5)
    path = fit_path(X, y, FitConfig(standardize=False, n_lambda=20))
    assert np.all(path.penalty_factor == 1.0)
    b0, b = prox_grad_lasso(X, y, path.lambdas[10], np.ones(5))
    np.testing.assert_allclose(path.coefs[10], b, atol=1e-4)


def test_strong_column_enters_first():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        beta = np.zeros(10)
        beta[seed % 10] = 3.0
        X, y = logistic_data(rng, 400, 10, beta=beta)
        assert fit_path(X, y, FitConfig(n_lambda=30)).selection_order[0] == f"x{seed % 10}"


def test_selection_order_row_permutation(rng):
    X, y = logistic_data(rng, 300, 8)
    perm = rng.permutation(300)
    a = fit_path(X, y).selection_order
    b = fit_path(X[perm], y[perm]).selection_order
    assert a == b


def test_predictions_invariant_to_column_scaling(rng):
    X, y = logistic_data(rng, 250, 6)
    D = rng.uniform(0.01, 100, 6)
    pa = fit_path(X, y, FitConfig(n_lambda=15))
    pb = fit_path(X * D, y, FitConfig(n_lambda=15))
    np.testing.assert_allclose(pa.lambdas, pb.lambdas, rtol=1e-9)
    for k in range(15):
        np.testing.assert_allclose(pa.decision_function(X, k), pb.decision_function(X * D, k), atol=1e-6)


def test_aliased_column_held_at_zero(rng):
    X, y = logistic_data(rng, 300, 3, beta=[2.0, 0.0, 0.0])
    X = np.column_stack([X, 1 - X[:, 0], np.full(300, 4.0)])
    path = fit_path(X, y)
    assert np.all(path.coefs[:, 3] == 0) and np.all(path.coefs[:, 4] == 0)
    assert path.penalty_factor[4] == 0.0
    assert path.selection_order[0] == "x0"


def test_non_convergence_is_flagged(rng):
    X, y = logistic_data(rng, 200, 8)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        path = fit_path(X, y, FitConfig(max_iter=1, n_lambda=10))
    assert not path.converged.all()
    assert any(issubclass(x.category, ConvergenceWarning) for x in w)
    assert len(path.lambdas) == 10  # the path still completes


def test_fit_needs_both_classes():
    with pytest.raises(ValueError):
        fit_path(np.ones((20, 2)), np.zeros(20, dtype=int))


def test_stratified_folds(rng):
    y = (rng.random(500) < 0.1).astype(int)
    f = make_folds(y, FitConfig(folds=10))
    for k in range(10):
        assert y[f == k].sum() >= 1
    counts = np.bincount(f)
    assert counts.max() - counts.min() <= 1
    with pytest.raises(ValueError, match="positives"):
        make_folds(np.r_[np.ones(3, int), np.zeros(100, int)], FitConfig(folds=10))


def test_chrono_folds():
    y = np.r_[np.zeros(50, int), np.ones(50, int)]
    with pytest.raises(ValueError, match="single class"):
        make_folds(y, FitConfig(folds=5, cv="chrono"))
    f = make_folds(np.tile([0, 1], 50), FitConfig(folds=5, cv="chrono"))
    assert np.all(np.diff(f) >= 0)


def test_choose_lambda_rules():
    # mean curve 1.0, .78, .75, .80; se at the minimum is .05
    cv = np.array([[1.0, 0.76, 0.80, 0.8], [1.0, 0.80, 0.70, 0.8]])
    assert choose_lambda(cv, "min") == 2
    assert choose_lambda(cv, "1se") == 1
    assert choose_lambda(np.array([[1.0, 0.5], [1.0, 0.5]]), "1se") == 1


def test_cross_validate_min_rule_minimizes(rng):
    X, y = logistic_data(rng, 300, 6, beta=[1, 0, 0, -1, 0, 0])
    fit = cross_validate(X, y, FitConfig(n_lambda=30, folds=5, cv_rule="min"))
    assert fit.lambda_index == int(np.argmin(fit.cv_mean))
    assert fit.cv_folds.shape == (5, 30) and len(fit.cv_mean) == 30
    assert fit.lambda_ in fit.path.lambdas
    assert {"x0", "x3"} <= set(fit.selected)


def test_duplicated_data_same_choice(rng):
    X, y = logistic_data(rng, 200, 5, beta=[1, 0, 0.5, 0, 0])
    cfg = FitConfig(n_lambda=25, folds=5)
    fit = cross_validate(X, y, cfg)
    dup = cross_validate(np.vstack([X, X]), np.r_[y, y], cfg, foldid=np.r_[fit.foldid, fit.foldid])
    assert dup.lambda_index == fit.lambda_index
    np.testing.assert_allclose(dup.coef, fit.coef, atol=1e-6)
    assert dup.intercept == pytest.approx(fit.intercept, abs=1e-6)


def test_path_and_meta_files(tmp_path, rng):
    X, y = logistic_data(rng, 120, 3)
    cfg = FitConfig(n_lambda=5, folds=3)
    fit = cross_validate(X, y, cfg, names=["a", "b", "c"])
    p = tmp_path / "path.csv"
    write_path(p, fit.path, fit.cv_mean)
    lines = p.read_text().splitlines()
    assert lines[0] == "lambda,deviance,nonzeros,cv_deviance,intercept,a,b,c"
    assert len(lines) == 6
    m = tmp_path / "fit.json"
    write_fit_meta(m, fit, cfg, {"side": "BID"})
    meta = json.loads(m.read_text())
    assert meta["lambda"] == fit.lambda_ and meta["config"]["folds"] == 3 and meta["side"] == "BID"
    assert meta["coef"] == list(fit.coef)
