"""Cross-validation tuners for the ambiguity-set radius.

Three schemes are provided:

* :func:`tune_radius_naive` ignores covariates and centers the ambiguity set
  at the raw held-in responses;
* :func:`tune_radius_covariate_independent` centers it at residual-based
  scenarios for covariates sampled from each held-out fold;
* :func:`tune_radius_covariate_dependent` targets the new covariate ``x`` and
  scores decisions on scenarios built from a second (lasso) fit on the
  held-out fold.

All three return the grid radius with the smallest CV score, breaking ties
toward the smallest radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .backend import DEFAULT_BACKEND, SolverBackend
from .core import CostSpec, FeasibleSet, FullSpace, SupportSet, evaluate_cost
from .dro import SAA, Wasserstein, solve_dro
from .exceptions import ConfigurationError, CovarDROError
from .regression import (Dataset, RegressionModel, cv_lasso_penalty, fit_linear,
                         kfold_partition, predict_and_residuals)
from .scenarios import ScenarioSet, build_er_scenarios


def default_grid() -> np.ndarray:
    """The 28 radii ``{b * 10^e : b in 0..9, e in {-1, -2, -3}}``."""
    return np.unique([float(f"{b}e{e}") for b in range(10) for e in (-1, -2, -3)])


@dataclass(frozen=True)
class RadiusGrid:
    values: np.ndarray = field(default_factory=default_grid)

    def __post_init__(self):
        vals = np.unique(np.asarray(self.values, dtype=float))
        if vals.size == 0:
            raise ConfigurationError("radius grid is empty")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ConfigurationError("radii must be finite and nonnegative")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class TuningConfig:
    """K folds, ``samples_per_fold`` covariates per fold (covariate-independent
    tuning; ``None`` means ``min(50, n // folds)``), the ambiguity family whose
    radius is tuned, and the master seed."""

    folds: int = 5
    samples_per_fold: int | None = None
    family: object = field(default_factory=Wasserstein)
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigurationError("need at least two folds")
        if self.samples_per_fold is not None and self.samples_per_fold < 1:
            raise ConfigurationError("samples_per_fold must be >= 1")

    def resolved_samples(self, n: int) -> int:
        cap = n // self.folds
        T = min(50, cap) if self.samples_per_fold is None else self.samples_per_fold
        if T > cap:
            raise ConfigurationError(f"samples_per_fold={T} exceeds floor(n/K)={cap}")
        return T


def select_radius(grid, scores, rtol: float = 1e-12) -> float:
    """Grid value with the smallest score; near-ties go to the smallest radius."""
    grid = np.asarray(grid, dtype=float)
    scores = np.asarray(scores, dtype=float)
    best = scores.min()
    tied = scores <= best + rtol * (1.0 + abs(best))
    return float(grid[tied].min())


def aggregate_fold_scores(table) -> np.ndarray:
    """Average a (K, ..., |grid|) table of per-fold mean costs down to one score per radius."""
    table = np.asarray(table, dtype=float)
    return table.reshape(table.shape[0], -1, table.shape[-1]).mean(axis=1).mean(axis=0)


def _grid(grid) -> np.ndarray:
    return grid.values if isinstance(grid, RadiusGrid) else RadiusGrid(grid).values


def _partition(n, cfg: TuningConfig):
    if n < 2 * cfg.folds:
        raise ConfigurationError(f"need n >= 2K = {2 * cfg.folds} observations, got {n}")
    return kfold_partition(n, cfg.folds, np.random.default_rng([cfg.seed, 0]))


def _fold_fit(fit, data, k):
    try:
        return fit(data)
    except (CovarDROError, np.linalg.LinAlgError) as exc:
        raise type(exc)(f"regression failed in fold {k}: {exc}") from exc


def _solve(cost, Z, scen, family, radius, backend):
    fam = family.with_radius(radius) if not isinstance(family, SAA) else family
    return solve_dro(cost, Z, scen, fam, backend).decision


def tune_radius_naive(data: Dataset, cost: CostSpec, Z: FeasibleSet, grid=None,
                      cfg: TuningConfig = TuningConfig(),
                      backend: SolverBackend = DEFAULT_BACKEND, return_scores: bool = False):
    """K-fold CV on the DRO problem centered at the raw held-in responses."""
    grid = _grid(default_grid() if grid is None else grid)
    parts = _partition(data.n, cfg)
    table = np.empty((cfg.folds, grid.size))
    for k, test in enumerate(parts):
        train = np.setdiff1d(np.arange(data.n), test)
        scen = ScenarioSet.from_points(data.Y[train], provenance="naive")
        for t, radius in enumerate(grid):
            z = _solve(cost, Z, scen, cfg.family, radius, backend)
            table[k, t] = evaluate_cost(cost, z, data.Y[test]).mean()
    scores = aggregate_fold_scores(table)
    zeta = select_radius(grid, scores)
    return (zeta, scores) if return_scores else zeta


def tune_radius_covariate_independent(
        data: Dataset, cost: CostSpec, Z: FeasibleSet, grid=None,
        cfg: TuningConfig = TuningConfig(),
        fit: Callable[[Dataset], RegressionModel] = partial(fit_linear, method="ols"),
        backend: SolverBackend = DEFAULT_BACKEND, support: SupportSet | None = None,
        return_scores: bool = False):
    """K-fold CV on residual-based DRO problems at covariates sampled from each fold.

    The held-in model is fitted once per fold and reused for every sampled
    covariate and every radius.
    """
    grid = _grid(default_grid() if grid is None else grid)
    support = FullSpace(data.dim_y) if support is None else support
    T = cfg.resolved_samples(data.n)
    parts = _partition(data.n, cfg)
    table = np.empty((cfg.folds, T, grid.size))
    for k, test in enumerate(parts):
        train = np.setdiff1d(np.arange(data.n), test)
        held_in = data.subset(train)
        model = _fold_fit(fit, held_in, k)
        _, resid = predict_and_residuals(model, held_in)
        rng = np.random.default_rng([cfg.seed, 1, k])
        picks = rng.choice(test, size=T, replace=False)
        for s, i in enumerate(picks):
            scen = build_er_scenarios(model, resid, data.X[i], support)
            for t, radius in enumerate(grid):
                z = _solve(cost, Z, scen, cfg.family, radius, backend)
                table[k, s, t] = evaluate_cost(cost, z, data.Y[test]).mean()
    scores = aggregate_fold_scores(table)
    zeta = select_radius(grid, scores)
    return (zeta, scores) if return_scores else zeta


def min_samples_covariate_dependent(folds: int = 5, inner_folds: int = 5) -> int:
    """Smallest n for which every fold can host an ``inner_folds``-fold lasso CV."""
    return folds * (inner_folds + 1)


def _lasso_cv_fit(data: Dataset, inner_folds: int, seed) -> RegressionModel:
    lam = cv_lasso_penalty(data, folds=inner_folds, seed=seed)
    return fit_linear(data, "lasso", lam)


def tune_radius_covariate_dependent(
        data: Dataset, cost: CostSpec, Z: FeasibleSet, x, grid=None,
        cfg: TuningConfig = TuningConfig(),
        fit: Callable[[Dataset], RegressionModel] = partial(fit_linear, method="ols"),
        backend: SolverBackend = DEFAULT_BACKEND, support: SupportSet | None = None,
        inner_folds: int = 5, fold_fit: Callable[[Dataset], RegressionModel] | None = None,
        return_scores: bool = False):
    """K-fold CV at the new covariate ``x``.

    Decisions from each held-in DRO problem are scored on scenarios
    ``f_k(x) + e_k^i`` from a second model fitted on the held-out fold itself
    (lasso with ``inner_folds``-fold CV unless ``fold_fit`` is given).
    """
    grid = _grid(default_grid() if grid is None else grid)
    support = FullSpace(data.dim_y) if support is None else support
    x = np.asarray(x, dtype=float)
    threshold = min_samples_covariate_dependent(cfg.folds, inner_folds)
    if fold_fit is None and data.n < threshold:
        raise ConfigurationError(
            f"covariate-dependent tuning needs n >= {threshold} "
            f"({inner_folds + 1} points per fold for {inner_folds}-fold lasso CV), got {data.n}")
    parts = _partition(data.n, cfg)
    table = np.empty((cfg.folds, grid.size))
    for k, test in enumerate(parts):
        train = np.setdiff1d(np.arange(data.n), test)
        held_in = data.subset(train)
        model = _fold_fit(fit, held_in, k)
        _, resid = predict_and_residuals(model, held_in)
        scen = build_er_scenarios(model, resid, x, support)
        held_out = data.subset(test)
        if fold_fit is None:
            second = _fold_fit(partial(_lasso_cv_fit, inner_folds=inner_folds,
                                       seed=[cfg.seed, 2, k]), held_out, k)
        else:
            second = _fold_fit(fold_fit, held_out, k)
        _, resid_k = predict_and_residuals(second, held_out)
        targets = build_er_scenarios(second, resid_k, x, support).points
        for t, radius in enumerate(grid):
            z = _solve(cost, Z, scen, cfg.family, radius, backend)
            table[k, t] = evaluate_cost(cost, z, targets).mean()
    scores = aggregate_fold_scores(table)
    zeta = select_radius(grid, scores)
    return (zeta, scores) if return_scores else zeta
