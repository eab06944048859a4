"""Shared domain types: max-affine costs, feasible sets, supports and projections."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linprog

from .exceptions import ConfigurationError, ContractError


def _as_float_array(value, ndim, name):
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ContractError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class CostSpec:
    """Piecewise max-affine cost ``c(z, y) = max_k [d_k + e_k.z + y.(F_k z + g_k)]``.

    Arrays are stacked over pieces: ``d`` has shape (K,), ``e`` (K, d_z),
    ``F`` (K, d_y, d_z) and ``g`` (K, d_y).
    """

    d: np.ndarray
    e: np.ndarray
    F: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        d = _as_float_array(self.d, 1, "d")
        e = _as_float_array(self.e, 2, "e")
        F = _as_float_array(self.F, 3, "F")
        g = _as_float_array(self.g, 2, "g")
        K = d.shape[0]
        if K < 1:
            raise ContractError("a cost needs at least one piece")
        if e.shape[0] != K or F.shape[0] != K or g.shape[0] != K:
            raise ContractError("piece counts of d, e, F, g disagree")
        if F.shape[1] != g.shape[1] or F.shape[2] != e.shape[1]:
            raise ContractError(
                f"inconsistent piece dimensions: e {e.shape}, F {F.shape}, g {g.shape}"
            )
        for name, arr in (("d", d), ("e", e), ("F", F), ("g", g)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_pieces(cls, pieces: Sequence[tuple]) -> "CostSpec":
        """Build from a list of ``(d_k, e_k, F_k, g_k)`` tuples."""
        if not pieces:
            raise ContractError("a cost needs at least one piece")
        d = [float(p[0]) for p in pieces]
        e = [np.atleast_1d(np.asarray(p[1], dtype=float)) for p in pieces]
        F = [np.atleast_2d(np.asarray(p[2], dtype=float)) for p in pieces]
        g = [np.atleast_1d(np.asarray(p[3], dtype=float)) for p in pieces]
        try:
            return cls(np.array(d), np.stack(e), np.stack(F), np.stack(g))
        except ValueError as exc:
            raise ContractError(f"inconsistent piece shapes: {exc}") from exc

    @property
    def n_pieces(self) -> int:
        return self.d.shape[0]

    @property
    def dim_decision(self) -> int:
        return self.e.shape[1]

    @property
    def dim_outcome(self) -> int:
        return self.g.shape[1]

    def slopes(self, z) -> np.ndarray:
        """Per-piece gradient in ``y``: rows ``F_k z + g_k``, shape (K, d_y)."""
        z = self._check_z(z)
        return self.F @ z + self.g

    def scenario_affine(self, Y) -> tuple[np.ndarray, np.ndarray]:
        """Affine-in-``z`` form of every (scenario, piece) pair.

        Returns ``(coef, const)`` with ``coef[i, k] = e_k + Y_i F_k`` of shape
        (n, K, d_z) and ``const[i, k] = d_k + Y_i . g_k`` of shape (n, K), so
        that piece ``k`` at scenario ``i`` equals ``coef[i, k] @ z + const[i, k]``.
        """
        Y = self._check_Y(Y)
        coef = self.e[None, :, :] + np.einsum("ij,kjl->ikl", Y, self.F)
        const = self.d[None, :] + Y @ self.g.T
        return coef, const

    def _check_z(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim_decision,):
            raise ContractError(f"decision must have shape ({self.dim_decision},), got {z.shape}")
        return z

    def _check_Y(self, Y):
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[None, :]
        if Y.ndim != 2 or Y.shape[1] != self.dim_outcome:
            raise ContractError(f"outcomes must have {self.dim_outcome} columns, got {Y.shape}")
        return Y


def evaluate_cost(cost: CostSpec, z, y) -> Union[float, np.ndarray]:
    """Evaluate ``c(z, y)``.

    ``y`` may be a single outcome (returns a float) or a 2-D array of
    outcomes, one per row (returns one cost per row).
    """
    z = cost._check_z(z)
    y_arr = np.asarray(y, dtype=float)
    single = y_arr.ndim == 1
    Y = cost._check_Y(y_arr)
    vals = (cost.d + cost.e @ z)[None, :] + Y @ cost.slopes(z).T
    out = vals.max(axis=1)
    return float(out[0]) if single else out


def cost_dual_norm_bound(cost: CostSpec, z) -> float:
    """Lipschitz constant of ``c(z, .)`` w.r.t. the l1 norm on outcomes.

    Equals ``max_k ||F_k z + g_k||_inf``.
    """
    return float(np.abs(cost.slopes(z)).max())


@dataclass(frozen=True)
class FeasibleSet:
    """Polyhedral decision set ``{z : A z <= b, A_eq z = b_eq, lb <= z <= ub}``.

    Must be nonempty and bounded; bounds may be ``-inf``/``inf`` only if the
    linear constraints bound those coordinates.
    """

    lb: np.ndarray
    ub: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        lb = np.array(self.lb, dtype=float)
        ub = np.array(self.ub, dtype=float)
        if lb.shape != ub.shape or lb.ndim != 1:
            raise ContractError("lb and ub must be 1-D arrays of equal length")
        if np.any(lb > ub):
            raise ConfigurationError("feasible set is empty: some lb > ub")
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        dim = lb.shape[0]
        for mat, vec in (("A", "b"), ("A_eq", "b_eq")):
            M, v = getattr(self, mat), getattr(self, vec)
            if (M is None) != (v is None):
                raise ContractError(f"{mat} and {vec} must be given together")
            if M is None:
                M, v = np.zeros((0, dim)), np.zeros(0)
            M = np.atleast_2d(np.array(M, dtype=float))
            v = np.atleast_1d(np.array(v, dtype=float))
            if M.shape != (v.shape[0], dim):
                raise ContractError(f"{mat} has shape {M.shape}, expected ({v.shape[0]}, {dim})")
            object.__setattr__(self, mat, M)
            object.__setattr__(self, vec, v)

    @property
    def dim(self) -> int:
        return self.lb.shape[0]

    @classmethod
    def singleton(cls, z) -> "FeasibleSet":
        z = np.asarray(z, dtype=float)
        return cls(lb=z, ub=z)

    def contains(self, z, tol: float = 1e-8) -> bool:
        z = np.asarray(z, dtype=float)
        if np.any(z < self.lb - tol) or np.any(z > self.ub + tol):
            return False
        if self.A.size and np.any(self.A @ z > self.b + tol):
            return False
        if self.A_eq.size and np.any(np.abs(self.A_eq @ z - self.b_eq) > tol):
            return False
        return True


# --- supports -------------------------------------------------------------


@dataclass(frozen=True)
class FullSpace:
    """The whole outcome space ``R^dim``."""

    dim: int


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``lo <= y <= hi``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float)
        hi = np.array(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ContractError("box bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ConfigurationError("empty box support: some lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True)
class Polyhedron:
    """Polyhedral support ``{y : A y <= b, A_eq y = b_eq}``."""

    A: np.ndarray
    b: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    _feasible_point: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.atleast_1d(np.array(self.b, dtype=float))
        dim = A.shape[1]
        if self.A_eq is None:
            A_eq, b_eq = np.zeros((0, dim)), np.zeros(0)
        else:
            A_eq = np.atleast_2d(np.array(self.A_eq, dtype=float))
            b_eq = np.atleast_1d(np.array(self.b_eq, dtype=float))
        if A.shape[0] != b.shape[0] or A_eq.shape != (b_eq.shape[0], dim):
            raise ContractError("inconsistent halfspace dimensions")
        res = linprog(np.zeros(dim), A_ub=A if A.size else None, b_ub=b if A.size else None,
                      A_eq=A_eq if A_eq.size else None, b_eq=b_eq if A_eq.size else None,
                      bounds=[(None, None)] * dim, method="highs")
        if res.status != 0:
            raise ConfigurationError("polyhedral support is empty")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "_feasible_point", res.x)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @classmethod
    def simplex(cls, dim: int) -> "Polyhedron":
        """Unit simplex ``{y >= 0, sum(y) = 1}``."""
        return cls(-np.eye(dim), np.zeros(dim), np.ones((1, dim)), np.ones(1))


SupportSet = Union[FullSpace, Box, Polyhedron]


def project_onto_support(support: SupportSet, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto a convex support set."""
    v = np.asarray(v, dtype=float)
    if v.shape != (support.dim,):
        raise ContractError(f"vector has shape {v.shape}, support dimension is {support.dim}")
    if not np.all(np.isfinite(v)):
        raise ContractError("cannot project a non-finite vector")
    if isinstance(support, FullSpace):
        return v.copy()
    if isinstance(support, Box):
        return np.clip(v, support.lo, support.hi)
    if isinstance(support, Polyhedron):
        return _project_polyhedron(support, v)
    raise ConfigurationError(f"unknown support type {type(support).__name__}")


def _project_polyhedron(poly: Polyhedron, v, tol=1e-12, max_iter=1000):
    # Primal active-set method for min 1/2 |w - v|^2 over the polyhedron.
    A, b, C = poly.A, poly.b, poly.A_eq
    w = poly._feasible_point.copy()
    if np.all(A @ v <= b + tol) and (not C.size or np.allclose(C @ v, poly.b_eq, atol=1e-12)):
        return v.copy()
    working: list[int] = []
    for _ in range(max_iter):
        G = np.vstack([C, A[working]]) if working else C
        r = v - w
        if G.size:
            # step = component of r in null(G)
            coeffs, *_ = np.linalg.lstsq(G.T, r, rcond=None)
            step = r - G.T @ coeffs
        else:
            coeffs = np.zeros(0)
            step = r
        if np.linalg.norm(step) <= 1e-13 * (1.0 + np.linalg.norm(v)):
            # stationarity (w - v) + G^T mu = 0 gives mu = coeffs
            lam = coeffs[C.shape[0]:]
            if lam.size == 0 or lam.min() >= -1e-12:
                return w
            working.pop(int(np.argmin(lam)))
            continue
        alpha, blocking = 1.0, None
        inactive = [i for i in range(A.shape[0]) if i not in working]
        for i in inactive:
            ap = A[i] @ step
            if ap > 1e-15:
                t = (b[i] - A[i] @ w) / ap
                if t < alpha:
                    alpha, blocking = max(t, 0.0), i
        w = w + alpha * step
        if blocking is not None:
            working.append(blocking)
    raise ConfigurationError("polyhedral projection did not converge")


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported distribution: ``points`` (n, d) with ``weights`` (n,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=float)
        if pts.ndim != 2 or w.shape != (pts.shape[0],):
            raise ContractError("points must be (n, d) and weights (n,)")
        if pts.shape[0] == 0:
            raise ContractError("a distribution needs at least one atom")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ContractError("weights must be nonnegative and sum to one")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteDistribution":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]
