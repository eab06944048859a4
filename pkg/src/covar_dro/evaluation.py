"""Out-of-sample evaluation: the multiple replication procedure (MRP) for a 99%
upper confidence bound on the optimality gap of a candidate decision."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import DEFAULT_BACKEND, SolverBackend
from .core import CostSpec, FeasibleSet, FullSpace, evaluate_cost
from .dro import solve_saa
from .exceptions import ConfigurationError, CovarDROError
from .scenarios import build_er_scenarios

T_MULTIPLIER_99 = 2.462


@dataclass(frozen=True)
class MRPConfig:
    """Replications, scenarios for the full-information SAA, evaluation draws."""

    reps: int = 30
    saa_samples: int = 20_000
    eval_samples: int = 5_000
    t_mult: float = T_MULTIPLIER_99

    def __post_init__(self):
        if self.reps < 2:
            raise ConfigurationError("MRP needs at least two replications")
        if self.saa_samples < 1 or self.eval_samples < 1:
            raise ConfigurationError("sample counts must be positive")
        if self.eval_samples > self.saa_samples:
            raise ConfigurationError("eval_samples cannot exceed saa_samples")

    @classmethod
    def full_scale(cls) -> "MRPConfig":
        return cls(reps=30, saa_samples=100_000, eval_samples=20_000)


@dataclass(frozen=True)
class UCBReport:
    gaps: np.ndarray
    mean: float
    variance: float
    ucb99: float
    config: MRPConfig = field(default_factory=MRPConfig)


def ucb_from_gaps(gaps, t_mult: float = T_MULTIPLIER_99) -> tuple[float, float, float]:
    """``(mean, sample variance, 100 * (mean + t_mult * sqrt(var / reps)))``."""
    gaps = np.asarray(gaps, dtype=float)
    reps = gaps.size
    if reps < 2:
        raise ConfigurationError("need at least two gap estimates")
    mean = float(gaps.mean())
    var = float(gaps.var(ddof=1))
    return mean, var, 100.0 * (mean + t_mult * math.sqrt(var / reps))


def _draws(error_sampler, seed, k, m):
    return np.asarray(error_sampler(np.random.default_rng([seed, k]), m), dtype=float)


def fi_saa_reference(cost: CostSpec, Z: FeasibleSet, true_model, error_sampler, x,
                     cfg: MRPConfig = MRPConfig(), backend: SolverBackend = DEFAULT_BACKEND,
                     seed=0) -> np.ndarray:
    """Full-information SAA optimal values, one per replication.

    These depend only on ``(x, seed)``, not on the candidate, so they can be
    shared by every candidate evaluated at the same covariate.
    """
    center = np.asarray(true_model(np.asarray(x, dtype=float)), dtype=float)
    values = np.empty(cfg.reps)
    for k in range(cfg.reps):
        eps = _draws(error_sampler, seed, k, cfg.saa_samples)
        scen = build_er_scenarios(lambda _x: center, eps, x, FullSpace(center.size), "FI")
        try:
            values[k] = solve_saa(cost, Z, scen, backend).value
        except CovarDROError as exc:
            raise type(exc)(f"MRP replication {k}: {exc}") from exc
    return values


def mrp_ucb(candidate, cost: CostSpec, Z: FeasibleSet, true_model, error_sampler, x,
            cfg: MRPConfig = MRPConfig(), backend: SolverBackend = DEFAULT_BACKEND, seed=0,
            reference: np.ndarray | None = None) -> UCBReport:
    """Normalized 99% UCB on the out-of-sample optimality gap of ``candidate``.

    Replication ``k`` draws ``saa_samples`` errors, estimates the optimal
    value by the full-information SAA on ``f*(x) + eps``, estimates the
    candidate's cost on the first ``eval_samples`` of the same draws, and
    records the difference. ``reference`` may carry precomputed SAA values
    from :func:`fi_saa_reference` with the same ``(x, cfg, seed)``.
    """
    candidate = np.asarray(candidate, dtype=float)
    if not Z.contains(candidate, tol=1e-6):
        raise ConfigurationError("candidate decision is infeasible")
    if reference is None:
        reference = fi_saa_reference(cost, Z, true_model, error_sampler, x, cfg, backend, seed)
    reference = np.asarray(reference, dtype=float)
    if reference.shape != (cfg.reps,):
        raise ConfigurationError("reference values do not match the replication count")
    center = np.asarray(true_model(np.asarray(x, dtype=float)), dtype=float)
    gaps = np.empty(cfg.reps)
    for k in range(cfg.reps):
        eps = _draws(error_sampler, seed, k, cfg.saa_samples)[: cfg.eval_samples]
        v_hat = float(evaluate_cost(cost, candidate, center + eps).mean())
        gaps[k] = v_hat - reference[k]
    mean, var, ucb = ucb_from_gaps(gaps, cfg.t_mult)
    return UCBReport(gaps, mean, var, ucb, cfg)


def out_of_sample_cost(candidate, cost: CostSpec, true_model, error_sampler, x, m: int,
                       seed=0) -> float:
    """Monte Carlo estimate of ``E[c(candidate, f*(x) + eps)]`` from ``m`` seeded draws."""
    if m < 1:
        raise ConfigurationError("m must be positive")
    center = np.asarray(true_model(np.asarray(x, dtype=float)), dtype=float)
    eps = np.asarray(error_sampler(np.random.default_rng(seed), m), dtype=float)
    return float(evaluate_cost(cost, np.asarray(candidate, dtype=float), center + eps).mean())
