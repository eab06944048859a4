"""Residual-based scenario sets and exact Wasserstein distances between discrete laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy import sparse

from .core import DiscreteDistribution, FullSpace, SupportSet, project_onto_support
from .exceptions import ConfigurationError, ContractError, SolverError
from .regression import RegressionModel

PROVENANCES = ("ER", "FI", "jackknife", "naive")


@dataclass(frozen=True)
class ScenarioSet:
    """Uniformly weighted scenarios ``proj_Y(f(x) + eps_i)`` for a covariate ``x``."""

    distribution: DiscreteDistribution
    support: SupportSet
    provenance: str = "ER"
    x: np.ndarray | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")
        w = self.distribution.weights
        if not np.allclose(w, w[0], rtol=0, atol=1e-15):
            raise ContractError("scenario weights must be uniform")

    @property
    def points(self) -> np.ndarray:
        return self.distribution.points

    @property
    def size(self) -> int:
        return self.distribution.size

    @classmethod
    def from_points(cls, points, support: SupportSet | None = None, provenance="naive", x=None):
        """Wrap raw outcome draws (no regression step), e.g. for naive SAA."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        support = FullSpace(pts.shape[1]) if support is None else support
        pts = np.array([project_onto_support(support, p) for p in pts]) if not isinstance(
            support, FullSpace) else pts
        return cls(DiscreteDistribution.uniform(pts), support, provenance, x)


def build_er_scenarios(model, residuals, x, support: SupportSet,
                       provenance: str = "ER") -> ScenarioSet:
    """Scenarios ``proj_Y(f(x) + residual_i)`` with uniform weights.

    ``model`` is any callable predictor (a fitted :class:`RegressionModel`,
    or the true regression function to obtain full-information scenarios).
    """
    res = np.asarray(residuals, dtype=float)
    if res.ndim == 1:
        res = res[:, None]
    if res.shape[0] == 0:
        raise ContractError("residual set is empty")
    x = np.asarray(x, dtype=float)
    center = np.atleast_1d(model(x) if not isinstance(model, RegressionModel) else model.predict(x))
    if center.shape != (res.shape[1],) or support.dim != res.shape[1]:
        raise ContractError(
            f"prediction {center.shape}, residuals {res.shape}, support dim {support.dim} disagree")
    pts = center[None, :] + res
    if not isinstance(support, FullSpace):
        pts = np.array([project_onto_support(support, p) for p in pts])
    return ScenarioSet(DiscreteDistribution.uniform(pts), support, provenance, x.copy())


def _ground_cost(P, Q, p, ground_norm):
    diff = P[:, None, :] - Q[None, :, :]
    if ground_norm == "l1":
        dist = np.abs(diff).sum(axis=2)
    elif ground_norm == "l2":
        dist = np.sqrt((diff ** 2).sum(axis=2))
    else:
        raise ConfigurationError(f"unknown ground norm {ground_norm!r}")
    return dist ** p


def wasserstein_p_distance(P: DiscreteDistribution, Q: DiscreteDistribution, p: float = 1.0,
                           ground_norm: str = "l2") -> float:
    """Exact p-Wasserstein distance between two discrete distributions.

    Solves the transport LP over couplings and returns the p-th root of
    its optimal value.
    """
    if p < 1:
        raise ConfigurationError("Wasserstein order must be at least 1")
    if P.dim != Q.dim:
        raise ContractError("distributions live in different dimensions")
    m, k = P.size, Q.size
    C = _ground_cost(P.points, Q.points, p, ground_norm)
    rows = sparse.kron(sparse.identity(m), np.ones((1, k)))
    cols = sparse.kron(np.ones((1, m)), sparse.identity(k))
    A_eq = sparse.vstack([rows, cols]).tocsr()
    b_eq = np.concatenate([P.weights, Q.weights])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverError(f"transport LP failed: {res.message}")
    return float(max(res.fun, 0.0) ** (1.0 / p))
