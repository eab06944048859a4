"""Linear prediction models, residuals, leave-one-out residuals and K-fold CV."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import (ConfigurationError, ContractError, DegenerateLeverageError,
                         NonConvergenceError, SingularDesignError)

METHODS = ("ols", "ridge", "lasso", "constant")


@dataclass(frozen=True)
class Dataset:
    """Joint observations: covariates ``X`` (n, d_x) and responses ``Y`` (n, d_y)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise ContractError(f"incompatible shapes X {X.shape}, Y {Y.shape}")
        if X.shape[0] < 1:
            raise ContractError("dataset is empty")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ContractError("dataset contains non-finite entries")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim_x(self) -> int:
        return self.X.shape[1]

    @property
    def dim_y(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.Y[idx])


@dataclass(frozen=True)
class RegressionModel:
    """Affine predictor ``x -> intercept + coef @ x``.

    ``penalty`` holds the per-output regularization weight for ridge/lasso
    fits (zeros otherwise).
    """

    intercept: np.ndarray
    coef: np.ndarray
    method: str = "ols"
    penalty: np.ndarray | None = None

    def __post_init__(self):
        nu = np.atleast_1d(np.array(self.intercept, dtype=float))
        M = np.atleast_2d(np.array(self.coef, dtype=float))
        if M.shape[0] != nu.shape[0]:
            raise ContractError(f"coef rows {M.shape[0]} != intercept length {nu.shape[0]}")
        if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(M))):
            raise ContractError("non-finite regression coefficients")
        pen = np.zeros(nu.shape[0]) if self.penalty is None else np.broadcast_to(
            np.asarray(self.penalty, dtype=float), nu.shape).copy()
        object.__setattr__(self, "intercept", nu)
        object.__setattr__(self, "coef", M)
        object.__setattr__(self, "penalty", pen)

    @property
    def dim_x(self) -> int:
        return self.coef.shape[1]

    @property
    def dim_y(self) -> int:
        return self.coef.shape[0]

    def predict(self, x) -> np.ndarray:
        """Predict for one covariate vector (returns (d_y,)) or a batch (n, d_x)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim_x:
            raise ContractError(f"covariate dimension {x.shape[-1]} != model dimension {self.dim_x}")
        return self.intercept + x @ self.coef.T

    __call__ = predict


# --- fitting ---------------------------------------------------------------


def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    active = scale > 1e-12 * (1.0 + np.abs(mean))
    Xs = np.zeros_like(X)
    Xs[:, active] = (X[:, active] - mean[active]) / scale[active]
    return Xs, mean, np.where(active, scale, 1.0), active


def _soft(v, t):
    return np.sign(v) * max(abs(v) - t, 0.0)


def _kkt_residual(G, c, beta, lam):
    r = c - G @ beta
    nz = beta != 0
    out = np.empty_like(r)
    out[nz] = np.abs(r[nz] - lam * np.sign(beta[nz]))
    out[~nz] = np.maximum(np.abs(r[~nz]) - lam, 0.0)
    return float(out.max()) if out.size else 0.0


def _polish(G, c, beta, lam):
    """Exact solve on the current support and signs, or None if it breaks them."""
    nz = np.flatnonzero(beta)
    if nz.size == 0:
        return None
    sgn = np.sign(beta[nz])
    try:
        sol = np.linalg.solve(G[np.ix_(nz, nz)], c[nz] - lam * sgn)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.sign(sol) != sgn):
        return None
    out = np.zeros_like(beta)
    out[nz] = sol
    return out


def _lasso_cd(G, c, lam, beta=None, tol=1e-10, max_sweeps=100_000):
    """Cyclic coordinate descent for ``1/2 b'Gb - c'b + lam |b|_1``.

    Stops when the subgradient KKT residual falls below ``tol``.
    """
    p = c.shape[0]
    beta = np.zeros(p) if beta is None else beta.copy()
    if p == 0:
        return beta
    r = c - G @ beta  # negative gradient of the smooth part
    diag = np.diag(G)
    for _ in range(max_sweeps):
        if _kkt_residual(G, c, beta, lam) <= tol:
            return beta
        polished = _polish(G, c, beta, lam)
        if polished is not None and _kkt_residual(G, c, polished, lam) <= tol:
            return polished
        for j in range(p):
            if diag[j] <= 0.0:
                continue
            old = beta[j]
            new = _soft(r[j] + diag[j] * old, lam) / diag[j]
            if new != old:
                r -= G[:, j] * (new - old)
                beta[j] = new
    raise NonConvergenceError("lasso coordinate descent hit its sweep cap",
                              kkt=_kkt_residual(G, c, beta, lam), lam=lam)


def _design_full_rank(X):
    Xa = np.column_stack([np.ones(X.shape[0]), X])
    return Xa, np.linalg.matrix_rank(Xa) == Xa.shape[1]


def fit_linear(data: Dataset, method: str = "ols", penalty=0.0) -> RegressionModel:
    """Fit an affine model ``Y ~ nu + M x`` output by output.

    Parameters
    ----------
    data : Dataset
    method : {"ols", "ridge", "lasso", "constant"}
        ``constant`` fits the mean response only (M = 0).
    penalty : float or array of shape (d_y,)
        Regularization weight for ridge/lasso. Predictors are standardized
        internally and the intercept is not penalized. Ridge minimizes
        ``|y - Xb|^2/(2n) + penalty/2 |b|^2`` and lasso
        ``|y - Xb|^2/(2n) + penalty |b|_1`` on the standardized scale.

    Raises
    ------
    SingularDesignError
        If OLS is requested on a rank-deficient design.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown regression method {method!r}")
    X, Y = data.X, data.Y
    n, dx = X.shape
    dy = Y.shape[1]
    if n < 2:
        raise ContractError("need at least two observations")
    lam = np.broadcast_to(np.asarray(penalty, dtype=float), (dy,)).copy()
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ConfigurationError("penalty must be finite and nonnegative")

    if method == "constant":
        return RegressionModel(Y.mean(axis=0), np.zeros((dy, dx)), "constant")

    if method == "ols":
        Xa, full = _design_full_rank(X)
        if not full:
            raise SingularDesignError(
                "OLS design matrix is rank deficient; use ridge regression instead")
        sol, *_ = np.linalg.lstsq(Xa, Y, rcond=None)
        return RegressionModel(sol[0], sol[1:].T, "ols")

    Xs, xmean, xscale, active = _standardize(X)
    ymean = Y.mean(axis=0)
    Yc = Y - ymean
    Xa = Xs[:, active]
    G = Xa.T @ Xa / n
    C = Xa.T @ Yc / n
    coef_std = np.zeros((dy, dx))
    for j in range(dy):
        if method == "ridge":
            b = np.linalg.solve(G + lam[j] * np.eye(G.shape[0]), C[:, j])
        else:
            b = _lasso_cd(G, C[:, j], lam[j])
        coef_std[j, active] = b
    coef = coef_std / xscale
    intercept = ymean - coef @ xmean
    return RegressionModel(intercept, coef, method, lam)


def lasso_kkt_residual(data: Dataset, model: RegressionModel) -> np.ndarray:
    """Per-output subgradient KKT residual of a lasso fit, on the standardized scale."""
    Xs, xmean, xscale, active = _standardize(data.X)
    n = data.n
    Yc = data.Y - data.Y.mean(axis=0)
    Xa = Xs[:, active]
    G = Xa.T @ Xa / n
    out = np.empty(data.dim_y)
    for j in range(data.dim_y):
        b = (model.coef[j] * xscale)[active]
        out[j] = _kkt_residual(G, Xa.T @ Yc[:, j] / n, b, model.penalty[j])
    return out


def lasso_lambda_max(data: Dataset) -> np.ndarray:
    """Smallest penalty, per output, at which the lasso solution is all zeros."""
    Xs, *_ = _standardize(data.X)
    Yc = data.Y - data.Y.mean(axis=0)
    return np.abs(Xs.T @ Yc / data.n).max(axis=0) if data.dim_x else np.zeros(data.dim_y)


def default_lasso_grid(lam_max: float, num: int = 50, ratio: float = 1e-3) -> np.ndarray:
    if lam_max <= 0:
        return np.array([0.0])
    return np.geomspace(lam_max, ratio * lam_max, num)


def predict_and_residuals(model: RegressionModel, data: Dataset):
    """Return ``(predictions, residuals)`` in dataset order."""
    if model.dim_x != data.dim_x or model.dim_y != data.dim_y:
        raise ContractError("model and dataset dimensions differ")
    pred = model.predict(data.X)
    return pred, data.Y - pred


def loo_residuals(data: Dataset) -> np.ndarray:
    """Leave-one-out OLS residuals ``y_i - f_{-i}(x_i)`` via the leverage identity."""
    Xa, full = _design_full_rank(data.X)
    if not full:
        raise SingularDesignError("OLS design matrix is rank deficient")
    Q, _ = np.linalg.qr(Xa)
    h = np.einsum("ij,ij->i", Q, Q)
    if np.any(h >= 1.0 - 1e-12):
        bad = np.flatnonzero(h >= 1.0 - 1e-12).tolist()
        raise DegenerateLeverageError(f"leverage is one at observations {bad}")
    _, resid = predict_and_residuals(fit_linear(data, "ols"), data)
    return resid / (1.0 - h)[:, None]


def loo_residuals_refit(data: Dataset, fit: Callable[[Dataset], RegressionModel]) -> np.ndarray:
    """Leave-one-out residuals by refitting ``fit`` n times (any regression method)."""
    out = np.empty_like(data.Y)
    for i in range(data.n):
        keep = np.arange(data.n) != i
        model = fit(data.subset(keep))
        out[i] = data.Y[i] - model.predict(data.X[i])
    return out


# --- cross-validation ---------------------------------------------------------


def kfold_partition(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle ``range(n)`` and split into ``folds`` parts whose sizes differ by at most one."""
    if folds < 2 or folds > n:
        raise ConfigurationError(f"cannot split {n} observations into {folds} folds")
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _argmin_prefer_larger(grid, scores, rtol=1e-12):
    # ties within rtol resolve to the largest grid value
    best = scores.min()
    tied = scores <= best + rtol * (1.0 + abs(best))
    return float(np.max(grid[tied]))


def cv_penalty(data: Dataset, method: str = "lasso", folds: int = 5,
               grid: Sequence[float] | None = None, seed=0) -> np.ndarray:
    """Choose a penalty per output by K-fold CV on held-out squared error.

    Ties are broken toward the larger penalty. ``grid=None`` uses, per
    output, 50 geometric points from the lasso ``lambda_max`` down to
    ``1e-3 * lambda_max`` (lasso) or from 1e3 down to 1e-3 (ridge).
    """
    if method not in ("lasso", "ridge"):
        raise ConfigurationError("cross-validated penalties apply to lasso/ridge only")
    if grid is not None and len(grid) == 0:
        raise ConfigurationError("penalty grid is empty")
    if folds < 2:
        raise ConfigurationError("need at least two folds")
    if data.n < folds + 1:
        raise ConfigurationError(
            f"{folds}-fold CV needs at least {folds + 1} observations, got {data.n}")
    if grid is not None:
        grids = [np.sort(np.unique(np.asarray(grid, dtype=float)))[::-1]] * data.dim_y
        if np.any(grids[0] < 0):
            raise ConfigurationError("penalties must be nonnegative")
    elif method == "lasso":
        grids = [default_lasso_grid(lm) for lm in lasso_lambda_max(data)]
    else:
        grids = [np.geomspace(1e3, 1e-3, 50)] * data.dim_y

    rng = np.random.default_rng(seed)
    parts = kfold_partition(data.n, folds, rng)
    sse = [np.zeros(len(g)) for g in grids]
    for test in parts:
        train = np.setdiff1d(np.arange(data.n), test)
        Xs, xmean, xscale, active = _standardize(data.X[train])
        ntr = train.size
        Xa = Xs[:, active]
        G = Xa.T @ Xa / ntr
        ymean = data.Y[train].mean(axis=0)
        Xte = ((data.X[test] - xmean) / xscale)[:, active]
        for j in range(data.dim_y):
            c = Xa.T @ (data.Y[train, j] - ymean[j]) / ntr
            beta = None
            for t, lam in enumerate(grids[j]):
                if method == "lasso":
                    beta = _lasso_cd(G, c, lam, beta)
                else:
                    beta = np.linalg.solve(G + lam * np.eye(G.shape[0]), c)
                err = data.Y[test, j] - (ymean[j] + Xte @ beta)
                sse[j][t] += err @ err
    return np.array([_argmin_prefer_larger(g, s / data.n) for g, s in zip(grids, sse)])


def cv_lasso_penalty(data: Dataset, folds: int = 5, grid: Sequence[float] | None = None,
                     seed=0) -> np.ndarray:
    """Per-output lasso penalty minimizing K-fold held-out MSE (ties -> larger)."""
    return cv_penalty(data, "lasso", folds, grid, seed)


def fit_with_cv(data: Dataset, method: str, folds: int = 5, seed=0) -> RegressionModel:
    """Fit ``method``; ridge/lasso penalties are chosen by K-fold CV first."""
    if method in ("ridge", "lasso"):
        return fit_linear(data, method, cv_penalty(data, method, folds, None, seed))
    return fit_linear(data, method)
