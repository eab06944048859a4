"""Synthetic covariate/return generator and the mean-CVaR portfolio program."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gamma

from .core import CostSpec, FeasibleSet, FullSpace
from .exceptions import ConfigurationError
from .regression import Dataset

THETAS = (0.5, 1.0, 2.0)
TAU_BOUND = 10.0


def random_correlation_vine(d: int, seed=None, eta: float = 1.0) -> np.ndarray:
    """Random correlation matrix by the C-vine method.

    Partial correlations on tree level ``k`` are drawn from
    ``Beta(b_k, b_k)`` rescaled to (-1, 1) with ``b_k = eta + (d - 2 - k)/2``
    and mapped to ordinary correlations through the partial-correlation
    recursion. For ``d = 2`` the single draw is uniform on (-1, 1).
    """
    if d < 1:
        raise ConfigurationError("dimension must be >= 1")
    rng = np.random.default_rng(seed)
    P = np.zeros((d, d))
    S = np.eye(d)
    for k in range(d - 1):
        beta = eta + (d - 2 - k) / 2.0
        P[k, k + 1:] = 2.0 * rng.beta(beta, beta, size=d - k - 1) - 1.0
        r = P[k, k + 1:].copy()
        for l in range(k - 1, -1, -1):
            pli = P[l, k + 1:]
            r = r * np.sqrt((1 - pli ** 2) * (1 - P[l, k] ** 2)) + pli * P[l, k]
        S[k, k + 1:] = r
        S[k + 1:, k] = r
    return S


def half_normal_moment(theta: float) -> float:
    """``E|Z|^theta`` for a standard normal ``Z``."""
    return 2.0 ** (theta / 2.0) * gamma((theta + 1.0) / 2.0) / math.sqrt(math.pi)


def scale_factor(theta: float) -> float:
    """Scaling ``s_theta`` that makes the expected return of asset j equal 0.03 j."""
    return 1.0 / half_normal_moment(theta)


@dataclass(frozen=True)
class CaseStudyConfig:
    dim_x: int = 3
    theta: float = 1.0
    n: int = 20
    seed: int = 0
    coef_seed: int = 0
    beta: float = 0.8
    rho: float = 10.0
    dim_y: int = 10
    n_predictive: int = 3

    def __post_init__(self):
        if self.theta not in THETAS:
            raise ConfigurationError(f"theta must be one of {THETAS}, got {self.theta}")
        if self.n < 2:
            raise ConfigurationError("n must be at least 2")
        if self.dim_x < self.n_predictive:
            raise ConfigurationError("need at least as many covariates as predictive ones")


@dataclass(frozen=True)
class TrueModel:
    """``f*(x)_j = nu_j + sum_{l in L*} mu_{jl} x_l^theta`` (L* = first covariates)."""

    intercept: np.ndarray
    coef: np.ndarray  # (d_y, |L*|)
    theta: float
    dim_x: int

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = self.coef.shape[1]
        return self.intercept + (x[..., :k] ** self.theta) @ self.coef.T


@dataclass(frozen=True)
class CaseStudy:
    """Everything fixed across data replications for one coefficient seed."""

    config: CaseStudyConfig
    correlation: np.ndarray
    true_model: TrueModel

    @property
    def support(self):
        return FullSpace(self.config.dim_y)

    def sample_covariates(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """``|N(0, correlation)|`` draws, shape (m, d_x)."""
        L = np.linalg.cholesky(self.correlation)
        return np.abs(rng.standard_normal((m, self.config.dim_x)) @ L.T)

    def sample_errors(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Additive errors ``eps_j + omega``: var(eps_j) = 0.025 j, var(omega) = 0.02."""
        j = np.arange(1, self.config.dim_y + 1)
        eps = rng.standard_normal((m, self.config.dim_y)) * np.sqrt(0.025 * j)
        omega = rng.standard_normal((m, 1)) * math.sqrt(0.02)
        return eps + omega

    def sample_dataset(self, seed, n: int | None = None) -> Dataset:
        rng = np.random.default_rng(seed)
        n = self.config.n if n is None else n
        X = self.sample_covariates(rng, n)
        Y = self.true_model(X) + self.sample_errors(rng, n)
        return Dataset(X, Y)

    def error_sampler(self) -> Callable[[np.random.Generator, int], np.ndarray]:
        return self.sample_errors


def build_case_study(cfg: CaseStudyConfig) -> CaseStudy:
    """Draw the vine correlation and the model coefficients from ``cfg.coef_seed``."""
    rng = np.random.default_rng(cfg.coef_seed)
    corr = random_correlation_vine(cfg.dim_x, rng)
    j = np.arange(1, cfg.dim_y + 1, dtype=float)
    s = scale_factor(cfg.theta)
    xi = rng.uniform(0.8, 1.2, size=(cfg.dim_y, 2))
    mu2 = 0.0075 * j * s * xi[:, 0]
    mu3 = 0.005 * j * s * xi[:, 1]
    mu1 = 0.025 * j * s - mu2 - mu3
    model = TrueModel(0.005 * j, np.column_stack([mu1, mu2, mu3]), cfg.theta, cfg.dim_x)
    return CaseStudy(cfg, corr, model)


def generate_dataset(cfg: CaseStudyConfig):
    """Return ``(dataset, true_model, error_sampler)`` for one data replication."""
    study = build_case_study(cfg)
    return study.sample_dataset(cfg.seed), study.true_model, study.error_sampler()


def portfolio_program(beta: float = 0.8, rho: float = 10.0, d: int = 10,
                      tau_bound: float = TAU_BOUND):
    """Mean-CVaR portfolio as a max-affine cost over ``(z, tau)``.

    ``c = -y.z + rho*tau + rho/(1-beta) * max(0, -y.z - tau)`` expands to
    two pieces: ``-y.z + rho*tau`` and
    ``-(1 + rho/(1-beta)) y.z + rho*(1 - 1/(1-beta)) tau``. The decision is
    ``z`` on the unit simplex plus ``tau`` in ``[-tau_bound, tau_bound]``.
    """
    if not 0 < beta < 1:
        raise ConfigurationError("beta must lie in (0, 1)")
    if rho < 0:
        raise ConfigurationError("rho must be nonnegative")
    k = rho / (1.0 - beta)
    F1 = np.hstack([-np.eye(d), np.zeros((d, 1))])
    e1 = np.r_[np.zeros(d), rho]
    e2 = np.r_[np.zeros(d), rho - k]
    cost = CostSpec.from_pieces([
        (0.0, e1, F1, np.zeros(d)),
        (0.0, e2, (1.0 + k) * F1, np.zeros(d)),
    ])
    lb = np.r_[np.zeros(d), -tau_bound]
    ub = np.r_[np.ones(d), tau_bound]
    A_eq = np.r_[np.ones(d), 0.0][None, :]
    return cost, FeasibleSet(lb, ub, A_eq=A_eq, b_eq=np.ones(1))
