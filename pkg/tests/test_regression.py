import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covar_dro.exceptions import (ConfigurationError, ContractError, DegenerateLeverageError,
                                  SingularDesignError)
from covar_dro.regression import (Dataset, RegressionModel, cv_lasso_penalty, cv_penalty,
                                  fit_linear, fit_with_cv, kfold_partition,
                                  lasso_kkt_residual, lasso_lambda_max, loo_residuals,
                                  loo_residuals_refit, predict_and_residuals)


def random_data(rng, n=30, dx=4, dy=2, noise=0.3):
    X = rng.normal(size=(n, dx))
    M = rng.normal(size=(dy, dx))
    Y = 0.5 + X @ M.T + noise * rng.normal(size=(n, dy))
    return Dataset(X, Y)


def brute_force_loo(data):
    out = np.empty_like(data.Y)
    for i in range(data.n):
        keep = np.arange(data.n) != i
        Xa = np.column_stack([np.ones(keep.sum()), data.X[keep]])
        sol, *_ = np.linalg.lstsq(Xa, data.Y[keep], rcond=None)
        out[i] = data.Y[i] - np.r_[1.0, data.X[i]] @ sol
    return out


# --- datasets and models ---------------------------------------------------------


def test_dataset_validation():
    with pytest.raises(ContractError):
        Dataset(np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(ContractError):
        Dataset(np.array([[np.nan]]), np.zeros((1, 1)))


def test_model_predict_shapes():
    m = RegressionModel(np.array([1.0, 2.0]), np.array([[1.0], [0.0]]), "ols")
    np.testing.assert_allclose(m.predict(np.array([3.0])), [4.0, 2.0])
    np.testing.assert_allclose(m(np.array([[3.0], [1.0]])), [[4.0, 2.0], [2.0, 2.0]])


# --- fit_linear ------------------------------------------------------------------


def test_ols_exact_line():
    data = Dataset(np.array([[1.0], [2.0]]), np.array([[2.0], [4.0]]))
    m = fit_linear(data, "ols")
    np.testing.assert_allclose(m.intercept, [0.0], atol=1e-12)
    np.testing.assert_allclose(m.coef, [[2.0]])


def test_ols_singular_design_suggests_ridge():
    X = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(SingularDesignError, match="ridge"):
        fit_linear(Dataset(X, np.arange(5.0)[:, None]), "ols")


def test_unknown_method_and_bad_penalty():
    data = random_data(np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        fit_linear(data, "forest")
    with pytest.raises(ConfigurationError):
        fit_linear(data, "lasso", -1.0)


def test_lasso_zero_penalty_is_ols():
    rng = np.random.default_rng(3)
    for _ in range(10):
        data = random_data(rng)
        ols, lasso = fit_linear(data, "ols"), fit_linear(data, "lasso", 0.0)
        np.testing.assert_allclose(lasso.coef, ols.coef, atol=1e-6)
        np.testing.assert_allclose(lasso.intercept, ols.intercept, atol=1e-6)


def test_lasso_above_lambda_max_is_null():
    data = random_data(np.random.default_rng(4))
    lam = lasso_lambda_max(data) * (1 + 1e-9)
    m = fit_linear(data, "lasso", lam)
    np.testing.assert_array_equal(m.coef, 0.0)
    np.testing.assert_allclose(m.intercept, data.Y.mean(axis=0))
    # just below lambda_max at least one coefficient becomes active per output
    m = fit_linear(data, "lasso", lasso_lambda_max(data) * 0.9)
    assert np.all(np.any(m.coef != 0, axis=1))


def test_lasso_matches_sklearn():
    sklearn = pytest.importorskip("sklearn.linear_model")
    rng = np.random.default_rng(5)
    data = random_data(rng, n=40, dx=6, dy=1)
    Xs = (data.X - data.X.mean(0)) / data.X.std(0)
    for lam in (0.01, 0.1, 0.3):
        ref = sklearn.Lasso(alpha=lam, tol=1e-14, max_iter=100_000).fit(Xs, data.Y[:, 0])
        m = fit_linear(data, "lasso", lam)
        np.testing.assert_allclose(m.coef[0] * data.X.std(0), ref.coef_, atol=1e-7)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.0, 1.2))
def test_lasso_kkt(seed, frac):
    rng = np.random.default_rng(seed)
    data = random_data(rng, n=25, dx=5, dy=2)
    m = fit_linear(data, "lasso", frac * lasso_lambda_max(data))
    assert np.all(lasso_kkt_residual(data, m) <= 1e-6)


def test_ridge_normal_equations():
    rng = np.random.default_rng(6)
    data = random_data(rng, dy=1)
    lam = 0.7
    m = fit_linear(data, "ridge", lam)
    Xs = (data.X - data.X.mean(0)) / data.X.std(0)
    yc = data.Y[:, 0] - data.Y[:, 0].mean()
    b = np.linalg.solve(Xs.T @ Xs / data.n + lam * np.eye(4), Xs.T @ yc / data.n)
    np.testing.assert_allclose(m.coef[0] * data.X.std(0), b, atol=1e-12)
    # intercept is unpenalized: residuals have zero mean
    _, r = predict_and_residuals(m, data)
    assert abs(r.mean()) < 1e-12


def test_ridge_path_continuity():
    data = random_data(np.random.default_rng(7))
    a = fit_linear(data, "ridge", 0.5).coef
    b = fit_linear(data, "ridge", 0.5 + 1e-6).coef
    assert np.abs(a - b).max() <= 1e-4


def test_constant_method():
    data = random_data(np.random.default_rng(8))
    m = fit_linear(data, "constant")
    np.testing.assert_array_equal(m.coef, 0.0)
    np.testing.assert_allclose(m.intercept, data.Y.mean(0))


# --- residuals -------------------------------------------------------------------


def test_residual_examples():
    data = Dataset(np.array([[1.0], [2.0], [3.0]]), np.array([[2.0], [4.0], [6.0]]))
    _, r = predict_and_residuals(fit_linear(data, "ols"), data)
    np.testing.assert_allclose(r, 0.0, atol=1e-12)
    m = RegressionModel(np.zeros(1), np.ones((1, 1)), "ols")
    _, r = predict_and_residuals(m, Dataset(np.array([[1.0]]), np.array([[2.0]])))
    assert r[0, 0] == 1.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_ols_residual_mean_zero(seed):
    data = random_data(np.random.default_rng(seed))
    _, r = predict_and_residuals(fit_linear(data, "ols"), data)
    assert np.abs(r.mean(axis=0)).max() <= 1e-9


def test_loo_small_1d():
    data = Dataset(np.array([[0.0], [1.0], [3.0]]), np.array([[1.0], [0.5], [2.0]]))
    np.testing.assert_allclose(loo_residuals(data), brute_force_loo(data), atol=1e-8)


def test_loo_exact_fit_is_zero():
    X = np.arange(6.0)[:, None]
    data = Dataset(X, 1 + 2 * X)
    np.testing.assert_allclose(loo_residuals(data), 0.0, atol=1e-10)


def test_loo_duplicates():
    X = np.array([[0.0], [1.0], [1.0], [2.0], [4.0]])
    Y = np.array([[0.3], [1.0], [1.4], [2.2], [3.9]])
    data = Dataset(X, Y)
    loo = loo_residuals(data)
    np.testing.assert_allclose(loo, brute_force_loo(data), atol=1e-8)
    _, r = predict_and_residuals(fit_linear(data, "ols"), data)
    Xa = np.column_stack([np.ones(5), X])
    h = np.diag(Xa @ np.linalg.solve(Xa.T @ Xa, Xa.T))
    assert h[1] == pytest.approx(h[2])
    np.testing.assert_allclose(loo[1:3, 0], r[1:3, 0] / (1 - h[1]), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(6, 50), dx=st.integers(1, 4))
def test_loo_matches_refit(seed, n, dx):
    data = random_data(np.random.default_rng(seed), n=n, dx=dx)
    np.testing.assert_allclose(loo_residuals(data), brute_force_loo(data), atol=1e-8)


def test_loo_refit_generic_matches_closed_form():
    data = random_data(np.random.default_rng(9), n=15)
    np.testing.assert_allclose(loo_residuals_refit(data, lambda d: fit_linear(d, "ols")),
                               loo_residuals(data), atol=1e-10)


def test_loo_degenerate_leverage():
    # an isolated covariate value only one observation carries has leverage one
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 1.0]])
    with pytest.raises(DegenerateLeverageError):
        loo_residuals(Dataset(X, np.arange(4.0)[:, None]))


# --- cross-validation ------------------------------------------------------------


def test_kfold_partition_sizes():
    parts = kfold_partition(23, 5, np.random.default_rng(0))
    sizes = sorted(p.size for p in parts)
    assert sizes[-1] - sizes[0] <= 1
    np.testing.assert_array_equal(np.sort(np.concatenate(parts)), np.arange(23))


def test_cv_singleton_grid():
    data = random_data(np.random.default_rng(10))
    np.testing.assert_array_equal(cv_lasso_penalty(data, grid=[0.0]), 0.0)


def test_cv_noiseless_prefers_zero():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(30, 3))
    data = Dataset(X, (1 + X @ np.array([1.0, -2.0, 0.5]))[:, None])
    np.testing.assert_array_equal(cv_lasso_penalty(data, grid=[0.0, 10.0]), 0.0)


def test_cv_pure_noise_prefers_large():
    votes = 0
    for seed in range(60):
        rng = np.random.default_rng(seed)
        data = Dataset(rng.normal(size=(20, 5)), rng.normal(size=(20, 1)))
        votes += cv_lasso_penalty(data, grid=[0.0, 100.0], seed=seed)[0] == 100.0
    assert votes > 30


def test_cv_ties_go_to_larger_penalty():
    rng = np.random.default_rng(12)
    data = Dataset(rng.normal(size=(20, 2)), np.ones((20, 1)))
    # constant response: every penalty predicts perfectly
    np.testing.assert_array_equal(cv_lasso_penalty(data, grid=[0.0, 1.0, 5.0]), 5.0)


def test_cv_errors():
    data = random_data(np.random.default_rng(13), n=5)
    with pytest.raises(ConfigurationError):
        cv_lasso_penalty(data, grid=[])
    with pytest.raises(ConfigurationError):
        cv_lasso_penalty(data, folds=5)
    with pytest.raises(ConfigurationError):
        cv_penalty(data, "ols")


def test_cv_deterministic_and_per_output():
    data = random_data(np.random.default_rng(14), n=40, dy=3)
    a = cv_lasso_penalty(data, seed=3)
    assert a.shape == (3,)
    np.testing.assert_array_equal(a, cv_lasso_penalty(data, seed=3))
    ridge = fit_with_cv(data, "ridge", seed=3)
    assert ridge.method == "ridge" and ridge.penalty.shape == (3,)
