"""Pluggable LP solver boundary.

Every optimization in the package is posed as ``min c.x`` subject to
``A_ub x <= b_ub``, ``A_eq x = b_eq`` and bounds; implementations of
:class:`SolverBackend` only need to solve that.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .exceptions import InfeasibleError, SolverError


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    ineq_duals: np.ndarray
    eq_duals: np.ndarray
    iterations: int = 0


class SolverBackend(abc.ABC):
    """Abstract LP solver. Implementations must be safe to share across threads
    or be cheap to construct per worker."""

    @abc.abstractmethod
    def solve_lp(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                 lb=None, ub=None) -> LPResult:
        """Minimize ``c @ x``; ``lb``/``ub`` default to ``-inf``/``inf``.

        Raises :class:`InfeasibleError` for infeasible problems and
        :class:`SolverError` for any other non-optimal outcome.
        """


class HighsBackend(SolverBackend):
    """HiGHS through :func:`scipy.optimize.linprog`.

    Problems with more than ``ipm_threshold`` rows use the interior point
    solver (with crossover), smaller ones dual simplex.
    """

    def __init__(self, ipm_threshold: int = 2000):
        self.ipm_threshold = ipm_threshold

    def solve_lp(self, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, lb=None, ub=None):
        c = np.asarray(c, dtype=float)
        nvar = c.shape[0]
        lb = np.full(nvar, -np.inf) if lb is None else np.asarray(lb, dtype=float)
        ub = np.full(nvar, np.inf) if ub is None else np.asarray(ub, dtype=float)
        rows = (0 if A_ub is None else A_ub.shape[0]) + (0 if A_eq is None else A_eq.shape[0])
        method = "highs-ipm" if rows > self.ipm_threshold else "highs-ds"
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack([lb, ub]), method=method)
        if res.status == 2:
            raise InfeasibleError(f"LP infeasible: {res.message}")
        if res.status != 0:
            raise SolverError(f"LP solve failed (status {res.status}): {res.message}")
        ineq = res.ineqlin.marginals if A_ub is not None else np.zeros(0)
        eq = res.eqlin.marginals if A_eq is not None else np.zeros(0)
        return LPResult(res.x, float(res.fun), np.asarray(ineq), np.asarray(eq), int(res.nit))


DEFAULT_BACKEND = HighsBackend()
