"""Residuals-based DRO solvers over several ambiguity-set families.

Wasserstein (order 1, l1 ground norm) and sample-robust problems are solved
as single LPs. Families that reweight the scenarios (CVaR, variation,
Hellinger, mean-upper-semideviation) are solved by a Kelley cutting-plane
scheme around the inner oracle :func:`discrete_sup`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy import sparse

from .backend import DEFAULT_BACKEND, SolverBackend
from .core import CostSpec, DiscreteDistribution, FeasibleSet, FullSpace, evaluate_cost
from .exceptions import ConfigurationError, ContractError, NonConvergenceError
from .scenarios import ScenarioSet

# --- ambiguity sets -----------------------------------------------------------


@dataclass(frozen=True)
class SAA:
    """No ambiguity: the empirical distribution itself."""

    radius: float = 0.0

    def __post_init__(self):
        if self.radius != 0.0:
            raise ConfigurationError("SAA has no radius")

    def with_radius(self, radius: float):
        return self


@dataclass(frozen=True)
class _Radius:
    radius: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise ConfigurationError(f"{type(self).__name__} radius must be finite and >= 0")

    def with_radius(self, radius: float):
        return replace(self, radius=float(radius))


@dataclass(frozen=True)
class Wasserstein(_Radius):
    """Type-1 Wasserstein ball with l1 ground norm around the scenarios."""


@dataclass(frozen=True)
class SampleRobust(_Radius):
    """Each scenario may move within an l1 ball of the given radius."""


@dataclass(frozen=True)
class CVaRSet(_Radius):
    """Reweightings capped at ``1 / (n (1 - radius))``; radius in [0, 1)."""

    def __post_init__(self):
        super().__post_init__()
        if self.radius >= 1:
            raise ConfigurationError("CVaR ambiguity radius must be < 1")


@dataclass(frozen=True)
class Variation(_Radius):
    """Reweightings with ``sum_i |p_i - 1/n| <= radius``."""


@dataclass(frozen=True)
class Hellinger(_Radius):
    """Reweightings with ``(1/n) sum_i (sqrt(n p_i) - 1)^2 <= radius``."""


@dataclass(frozen=True)
class MeanUpperSemidev(_Radius):
    """``p_i = (1 + q_i - mean(q)) / n`` with ``q >= 0``, ``|q|_b <= radius``, ``b = a/(a-1)``."""

    order: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not self.order >= 1:
            raise ConfigurationError("semideviation order must be >= 1")

    @property
    def dual_order(self) -> float:
        return math.inf if self.order == 1 else self.order / (self.order - 1.0)


AmbiguitySpec = Union[SAA, Wasserstein, SampleRobust, CVaRSet, Variation, Hellinger,
                      MeanUpperSemidev]
DISCRETE_FAMILIES = (CVaRSet, Variation, Hellinger, MeanUpperSemidev)


@dataclass
class DROSolution:
    """Optimal decision and value of a DRO (or SAA) problem.

    ``weights`` is the worst-case reweighting for discrete-support families,
    ``multiplier`` the optimal dual variable of the Wasserstein budget.
    """

    decision: np.ndarray
    value: float
    weights: np.ndarray | None = None
    multiplier: float | None = None
    iterations: int = 1
    gap: float = 0.0
    diagnostics: dict = field(default_factory=dict)


# --- LP assembly ----------------------------------------------------------------


class _LP:
    """Row-block builder for LPs over ``(z, extra variables)``."""

    def __init__(self, Z: FeasibleSet, n_extra: int, extra_lb, extra_ub):
        self.dz = Z.dim
        self.n_extra = n_extra
        self.lb = np.concatenate([Z.lb, np.broadcast_to(extra_lb, (n_extra,))])
        self.ub = np.concatenate([Z.ub, np.broadcast_to(extra_ub, (n_extra,))])
        self._rows, self._rhs = [], []
        self._eq, self._eq_rhs = [], []
        if Z.A.shape[0]:
            self.add(Z.A, sparse.csr_matrix((Z.A.shape[0], n_extra)), Z.b)
        if Z.A_eq.shape[0]:
            self._eq.append(sparse.hstack([sparse.csr_matrix(Z.A_eq),
                                           sparse.csr_matrix((Z.A_eq.shape[0], n_extra))]))
            self._eq_rhs.append(Z.b_eq)

    def add(self, Az, Aextra, rhs):
        self._rows.append(sparse.hstack([sparse.csr_matrix(Az), sparse.csr_matrix(Aextra)]))
        self._rhs.append(np.asarray(rhs, dtype=float))

    def solve(self, backend: SolverBackend, c):
        A_ub = sparse.vstack(self._rows).tocsr() if self._rows else None
        b_ub = np.concatenate(self._rhs) if self._rows else None
        A_eq = sparse.vstack(self._eq).tocsr() if self._eq else None
        b_eq = np.concatenate(self._eq_rhs) if self._eq else None
        return backend.solve_lp(c, A_ub, b_ub, A_eq, b_eq, self.lb, self.ub)


def _unpack(cost: CostSpec, Z: FeasibleSet, scenarios):
    if isinstance(scenarios, ScenarioSet):
        dist, support = scenarios.distribution, scenarios.support
    elif isinstance(scenarios, DiscreteDistribution):
        dist, support = scenarios, FullSpace(scenarios.dim)
    else:
        dist = DiscreteDistribution.uniform(np.atleast_2d(np.asarray(scenarios, dtype=float)))
        support = FullSpace(dist.dim)
    if dist.dim != cost.dim_outcome or Z.dim != cost.dim_decision:
        raise ContractError("cost, feasible set and scenario dimensions disagree")
    return dist.points, dist.weights, support


def _require_full_space(support, what):
    if not isinstance(support, FullSpace):
        raise ConfigurationError(f"{what} is implemented for FullSpace support only")


def _slope_rows(cost: CostSpec):
    # rows of (F_k z + g_k)_j as affine functions of z, stacked over (k, j)
    K, dy, dz = cost.F.shape
    return cost.F.reshape(K * dy, dz), cost.g.reshape(K * dy)


def saa_objective(cost: CostSpec, z, points, weights=None) -> float:
    vals = evaluate_cost(cost, z, points)
    return float(np.mean(vals) if weights is None else weights @ vals)


# --- solvers -----------------------------------------------------------------------


def solve_saa(cost: CostSpec, Z: FeasibleSet, scenarios, backend: SolverBackend = DEFAULT_BACKEND
              ) -> DROSolution:
    """Minimize the (weighted) sample average of the cost over ``Z``.

    Uses ``c(z, y_i) = piece_0 + w_i`` with ``w_i >= piece_k - piece_0``,
    ``w_i >= 0``, which keeps one slack per scenario.
    """
    Y, p, _ = _unpack(cost, Z, scenarios)
    coef, const = cost.scenario_affine(Y)
    n, K = const.shape
    n_extra = n if K > 1 else 0
    lp = _LP(Z, n_extra, 0.0, np.inf)
    eye = sparse.identity(n, format="csr")
    for k in range(1, K):
        lp.add(coef[:, k, :] - coef[:, 0, :], -eye, const[:, 0] - const[:, k])
    c = np.concatenate([p @ coef[:, 0, :], p if K > 1 else np.zeros(0)])
    res = lp.solve(backend, c)
    z = res.x[: Z.dim]
    return DROSolution(z, saa_objective(cost, z, Y, p), weights=p.copy(), iterations=res.iterations)


def _slack_rows(lp, coef, const, n_before, n_after):
    """Rows ``piece_k(z) - piece_0(z) <= w_i`` for every scenario and piece ``k >= 1``.

    ``w`` sits after ``n_before`` extra variables and is followed by
    ``n_after`` more; ``piece_0 + w_i`` is then the cost at scenario ``i``.
    """
    n, K = const.shape
    eye = sparse.identity(n, format="csr")
    left = sparse.csr_matrix((n, n_before))
    right = sparse.csr_matrix((n, n_after))
    for k in range(1, K):
        lp.add(coef[:, k, :] - coef[:, 0, :], sparse.hstack([left, -eye, right]),
               const[:, 0] - const[:, k])


def solve_wasserstein_dro(cost: CostSpec, Z: FeasibleSet, scenarios, radius: float,
                          backend: SolverBackend = DEFAULT_BACKEND) -> DROSolution:
    """Type-1 Wasserstein DRO with l1 ground norm on an unbounded support.

    LP: ``min radius*lam + sum_i p_i s_i`` s.t. every piece at every scenario
    is below ``s_i`` and ``|F_k z + g_k|_inf <= lam``. ``s_i`` is written as
    the first piece plus a nonnegative slack, which keeps one row per
    scenario and extra piece.
    """
    if radius < 0:
        raise ConfigurationError("radius must be nonnegative")
    Y, p, support = _unpack(cost, Z, scenarios)
    _require_full_space(support, "Wasserstein DRO")
    coef, const = cost.scenario_affine(Y)
    n, K = const.shape
    dz = Z.dim
    nw = n if K > 1 else 0
    # extra variables: [lam, w_1..w_n]
    lp = _LP(Z, 1 + nw, 0.0, np.inf)
    _slack_rows(lp, coef, const, 1, 0)
    Fz, g = _slope_rows(cost)
    m = Fz.shape[0]
    lam_col = sparse.hstack([-np.ones((m, 1)), sparse.csr_matrix((m, nw))])
    lp.add(Fz, lam_col, -g)
    lp.add(-Fz, lam_col, g)
    c = np.concatenate([p @ coef[:, 0, :], [radius], p if nw else np.zeros(0)])
    res = lp.solve(backend, c)
    z = res.x[:dz]
    return DROSolution(z, float(res.fun + p @ const[:, 0]), multiplier=float(res.x[dz]),
                       iterations=res.iterations)


def solve_sample_robust(cost: CostSpec, Z: FeasibleSet, scenarios, radius: float,
                        backend: SolverBackend = DEFAULT_BACKEND) -> DROSolution:
    """Sample-robust problem: every scenario moves adversarially within an l1 ball.

    Each affine piece's sup over the ball adds ``radius * |F_k z + g_k|_inf``.
    """
    if radius < 0:
        raise ConfigurationError("radius must be nonnegative")
    Y, p, support = _unpack(cost, Z, scenarios)
    _require_full_space(support, "sample-robust DRO")
    coef, const = cost.scenario_affine(Y)
    n, K = const.shape
    dz, dy = Z.dim, cost.dim_outcome
    nw = n if K > 1 else 0
    # extra variables: [lam_1..lam_K, w_1..w_n]; scenario cost is piece_0 + radius*lam_0 + w_i
    lp = _LP(Z, K + nw, 0.0, np.inf)
    eye = sparse.identity(n, format="csr")
    for k in range(1, K):
        lam_diff = np.zeros((n, K))
        lam_diff[:, k] = radius
        lam_diff[:, 0] = -radius
        lp.add(coef[:, k, :] - coef[:, 0, :], sparse.hstack([lam_diff, -eye]),
               const[:, 0] - const[:, k])
    Fz, g = _slope_rows(cost)
    lam_rows = sparse.kron(sparse.identity(K), np.ones((dy, 1)))
    lam_col = sparse.hstack([-lam_rows, sparse.csr_matrix((K * dy, nw))])
    lp.add(Fz, lam_col, -g)
    lp.add(-Fz, lam_col, g)
    lam_obj = np.zeros(K)
    lam_obj[0] = radius
    c = np.concatenate([p @ coef[:, 0, :], lam_obj, p if nw else np.zeros(0)])
    res = lp.solve(backend, c)
    return DROSolution(res.x[:dz], float(res.fun + p @ const[:, 0]), iterations=res.iterations)


# --- inner oracles for reweighting families -----------------------------------------


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size == 0 or not np.all(np.isfinite(u)):
        raise ContractError("per-scenario costs must be a nonempty finite vector")
    return u


def _sup_cvar(u, radius):
    n = u.size
    cap = 1.0 / (n * (1.0 - radius))
    p = np.zeros(n)
    remaining = 1.0
    for i in np.argsort(-u, kind="stable"):
        take = min(cap, remaining)
        p[i] = take
        remaining -= take
        if remaining <= 0.0:
            break
    return p


def _sup_variation(u, radius):
    n = u.size
    p = np.full(n, 1.0 / n)
    top = int(np.argmax(u))
    budget = radius / 2.0
    for i in np.argsort(u, kind="stable"):
        if budget <= 0.0:
            break
        if i == top or u[i] >= u[top]:
            continue
        take = min(p[i], budget)
        p[i] -= take
        p[top] += take
        budget -= take
    return p


def hellinger_divergence(p) -> float:
    """``(1/n) sum_i (sqrt(n p_i) - 1)^2``."""
    p = np.asarray(p, dtype=float)
    n = p.size
    return float(np.mean((np.sqrt(n * np.clip(p, 0, None)) - 1.0) ** 2))


def _sup_hellinger(u, radius, rel_tol=1e-15, max_iter=400):
    # Stationarity of the Lagrangian gives sqrt(n p_i) = lam / (w + delta_i) with
    # delta_i = max(u) - u_i and w > 0; normalization fixes lam(w) in closed
    # form, leaving a monotone 1-D search in w for divergence == radius.
    n = u.size
    top = u == u.max()
    m = int(top.sum())
    div_top = ((n - m) + m * (math.sqrt(n / m) - 1.0) ** 2) / n
    if radius >= div_top:
        p = top / m
        return p, {"search_iters": 0, "boundary": True}
    delta = u.max() - u

    def weights(w):
        a = 1.0 / (w + delta)
        lam = math.sqrt(n) / np.linalg.norm(a)
        root_q = lam * a
        return root_q ** 2 / n, 2.0 - 2.0 * root_q.sum() / n

    scale = max(float(delta.max()), 1e-300)
    lo, hi = scale * 1e-12, scale
    while weights(hi)[1] > radius:
        hi *= 4.0
        if hi > 1e300:
            break
    while weights(lo)[1] < radius and lo > 1e-300:
        lo /= 4.0
    it = 0
    for it in range(max_iter):
        mid = math.sqrt(lo * hi)
        if weights(mid)[1] > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    else:
        raise NonConvergenceError("Hellinger inner search did not converge", lo=lo, hi=hi)
    p, _ = weights(hi)  # feasible side: divergence <= radius
    return p / p.sum(), {"search_iters": it + 1, "boundary": False}


def _sup_semidev(u, radius, order):
    n = u.size
    ubar = u.mean()
    w = np.clip(u - ubar, 0.0, None)
    if not np.any(w > 0) or radius == 0:
        return np.full(n, 1.0 / n)
    if order == 1:
        q = radius * (w > 0)
    else:
        w = w / w.max()  # q is scale-invariant in w; this avoids underflow
        wa = w ** (order - 1.0)
        q = radius * wa / np.linalg.norm(w, order) ** (order - 1.0)
    if q.mean() <= 1.0:
        return (1.0 + q - q.mean()) / n
    return _sup_semidev_constrained(u, radius, order)


def _sup_semidev_constrained(u, radius, order):
    # nonnegativity of p binds: solve the small conic program directly
    import cvxpy as cp

    n = u.size
    b = math.inf if order == 1 else order / (order - 1.0)
    q = cp.Variable(n, nonneg=True)
    qbar = cp.sum(q) / n
    cons = [cp.norm(q, b) <= radius, 1 + q - qbar >= 0]
    cp.Problem(cp.Maximize((u - u.mean()) @ q), cons).solve(solver=cp.CLARABEL)
    qv = np.clip(q.value, 0.0, None)
    p = np.clip((1.0 + qv - qv.mean()) / n, 0.0, None)
    return p / p.sum()


def discrete_sup(family, u):
    """Worst-case expectation ``sup_p p.u`` over a reweighting family.

    Returns ``(value, p)`` with ``p`` an attaining (or, for Hellinger,
    bisection-accurate) worst-case reweighting. Ties among equal costs are
    broken by index.
    """
    u = _check_u(u)
    n = u.size
    if isinstance(family, SAA) or family.radius == 0.0:
        p = np.full(n, 1.0 / n)
    elif isinstance(family, CVaRSet):
        p = _sup_cvar(u, family.radius)
    elif isinstance(family, Variation):
        p = _sup_variation(u, family.radius)
    elif isinstance(family, Hellinger):
        p, _ = _sup_hellinger(u, family.radius)
    elif isinstance(family, MeanUpperSemidev):
        p = _sup_semidev(u, family.radius, family.order)
    else:
        raise ConfigurationError(f"{type(family).__name__} is not a reweighting family")
    return float(p @ u), p


def solve_discrete_support_dro(cost: CostSpec, Z: FeasibleSet, scenarios, family,
                               backend: SolverBackend = DEFAULT_BACKEND, tol: float = 1e-6,
                               max_iters: int = 200) -> DROSolution:
    """Kelley cutting planes for ``min_z sup_p sum_i p_i c(z, y_i)``.

    The master LP minimizes ``theta`` over ``(z, u, theta)`` with
    ``u_i >= c(z, y_i)`` and one cut ``theta >= p_j . u`` per worst-case
    reweighting found so far. Stops when the best upper bound is within
    ``tol`` of the master value.
    """
    if not isinstance(family, DISCRETE_FAMILIES + (SAA,)):
        raise ConfigurationError(f"{type(family).__name__} is not a reweighting family")
    Y, p0, _ = _unpack(cost, Z, scenarios)
    coef, const = cost.scenario_affine(Y)
    n, K = const.shape
    dz = Z.dim
    base = _LP(Z, n + 1, -np.inf, np.inf)
    sel = sparse.kron(sparse.identity(n), np.ones((K, 1))).tocsr()
    base.add(coef.reshape(n * K, dz), sparse.hstack([-sel, sparse.csr_matrix((n * K, 1))]),
             -const.reshape(n * K))
    c = np.zeros(dz + n + 1)
    c[-1] = 1.0
    cuts = [np.full(n, 1.0 / n)]
    best = None
    lower = -np.inf
    for it in range(1, max_iters + 1):
        lp = _copy_lp(base)
        lp.add(np.zeros((len(cuts), dz)),
               sparse.hstack([sparse.csr_matrix(np.array(cuts)), -np.ones((len(cuts), 1))]),
               np.zeros(len(cuts)))
        res = lp.solve(backend, c)
        z = res.x[:dz]
        lower = max(lower, float(res.fun))
        u = evaluate_cost(cost, z, Y)
        val, p = discrete_sup(family, u)
        if best is None or val < best[1]:
            best = (z, val, p)
        gap = best[1] - lower
        if gap <= tol:
            return DROSolution(best[0], best[1], weights=best[2], iterations=it, gap=gap,
                               diagnostics={"lower_bound": lower, "cuts": len(cuts)})
        cuts.append(p)
    raise NonConvergenceError(
        f"cutting-plane DRO did not converge in {max_iters} iterations (gap {gap:.3e})",
        gap=gap, lower_bound=lower, upper_bound=best[1])


def _copy_lp(lp: _LP) -> _LP:
    new = object.__new__(_LP)
    new.__dict__.update(lp.__dict__)
    new._rows, new._rhs = list(lp._rows), list(lp._rhs)
    return new


def solve_dro(cost: CostSpec, Z: FeasibleSet, scenarios, family,
              backend: SolverBackend = DEFAULT_BACKEND, **kwargs) -> DROSolution:
    """Dispatch to the solver matching the ambiguity-set family."""
    if isinstance(family, SAA):
        return solve_saa(cost, Z, scenarios, backend)
    if isinstance(family, Wasserstein):
        return solve_wasserstein_dro(cost, Z, scenarios, family.radius, backend)
    if isinstance(family, SampleRobust):
        return solve_sample_robust(cost, Z, scenarios, family.radius, backend)
    if isinstance(family, DISCRETE_FAMILIES):
        return solve_discrete_support_dro(cost, Z, scenarios, family, backend, **kwargs)
    raise ConfigurationError(f"unknown ambiguity family {family!r}")


# --- deviation from the uniform reweighting ---------------------------------------


@dataclass(frozen=True)
class DeviationBound:
    """``sup_p sum_i (p_i - 1/n)^2``: computed value, analytic upper bound and
    the value at the explicit sharpness construction (``None`` where it does
    not apply)."""

    value: float
    upper_bound: float
    construction: float | None


MAX_ENUMERATION = 12


def _dev(p):
    return float(np.sum((p - 1.0 / p.size) ** 2))


def _cvar_deviation(n, radius):
    cap = 1.0 / (n * (1.0 - radius))
    best = 0.0
    # extreme points: n-1 coordinates at 0 or cap, the last one absorbs the rest;
    # the objective is permutation invariant so the free coordinate can be fixed last
    for bits in itertools.product((0.0, cap), repeat=n - 1):
        last = 1.0 - sum(bits)
        if -1e-12 <= last <= cap + 1e-12:
            best = max(best, _dev(np.array(bits + (last,))))
    m = int(math.floor(1.0 / cap + 1e-12))
    constr = np.zeros(n)
    constr[:m] = cap
    if m < n:
        constr[m] = 1.0 - m * cap
    return best, _dev(constr)


def _variation_vertices(n, radius):
    # Vertices of {p in simplex : |p - 1/n|_1 <= radius}: mass s moves onto one
    # coordinate, taken greedily from the others (each holds at most 1/n); s is
    # either 0 or as large as the ball and the simplex allow.
    s_max = min(radius / 2.0, (n - 1.0) / n)
    out = []
    for s in (0.0, s_max):
        p = np.full(n, 1.0 / n)
        p[0] += s
        rest = s
        for i in range(1, n):
            take = min(1.0 / n, rest)
            p[i] -= take
            rest -= take
        out.append(p)
    return out


def _semidev_deviation(n, radius, order, starts=16, seed=0):
    b = math.inf if order == 1 else order / (order - 1.0)

    def lmo(g):
        gp = np.clip(g, 0.0, None)
        if not np.any(gp > 0):
            return None
        if order == 1:
            return radius * (gp > 0)
        wa = gp ** (order - 1.0)
        return radius * wa / np.linalg.norm(gp, order) ** (order - 1.0)

    def f(q):
        return float(np.sum((q - q.mean()) ** 2)) / n ** 2

    rng = np.random.default_rng(seed)
    inits = [radius * np.eye(n)[0]]
    for _ in range(starts):
        d = rng.exponential(size=n) * (rng.random(n) < 0.5 + 0.5 * rng.random())
        if d.sum() == 0:
            d[0] = 1.0
        norm = np.linalg.norm(d, b)
        inits.append(radius * d / norm)
    best = 0.0
    for q in inits:
        for _ in range(200):
            nxt = lmo(q - q.mean())
            if nxt is None or f(nxt) <= f(q) + 1e-15:
                break
            q = nxt
        best = max(best, f(q))
    if b <= 2:
        upper = 4.0 * radius ** 2 / n ** 2
    else:
        upper = 4.0 * radius ** 2 / n ** (1.0 + 2.0 / b)
    construction = radius ** 2 * (n - 1.0) / n ** 3
    return best, upper, construction


def deviation_sup(family, n: int, radius: float | None = None) -> DeviationBound:
    """Largest squared deviation of an admissible reweighting from uniform.

    CVaR and variation sets are handled by maximizing over their extreme
    points (``n <= 12``); mean-upper-semideviation sets by a multi-start
    conditional-gradient ascent, restricted to radii for which every
    admissible ``q`` yields ``p >= 0`` (``radius <= n^(1/b)``).
    """
    if radius is not None:
        family = family.with_radius(radius)
    radius = family.radius
    if n < 1:
        raise ContractError("n must be positive")
    if isinstance(family, CVaRSet):
        if n > MAX_ENUMERATION:
            raise ConfigurationError(f"extreme-point enumeration supports n <= {MAX_ENUMERATION}")
        if radius == 0:
            return DeviationBound(0.0, 1.0 / n ** 2, 0.0)
        value, constr = _cvar_deviation(n, radius)
        return DeviationBound(value, 1.0 / n ** 2 + (radius / (1.0 - radius)) / n, constr)
    if isinstance(family, Variation):
        if n > MAX_ENUMERATION:
            raise ConfigurationError(f"extreme-point enumeration supports n <= {MAX_ENUMERATION}")
        value = max(_dev(p) for p in _variation_vertices(n, radius))
        constr = None
        if n >= 2 and radius <= 1.0:
            constr = radius ** 2 / 4.0 + radius ** 2 / (4.0 * (n - 1))
        return DeviationBound(value, radius ** 2, constr)
    if isinstance(family, MeanUpperSemidev):
        b = family.dual_order
        limit = 1.0 if math.isinf(b) else n ** (1.0 / b)
        if radius > limit:
            raise ConfigurationError(
                f"semideviation deviation needs radius <= n^(1/b) = {limit:.6g}")
        if radius == 0:
            return DeviationBound(0.0, 0.0, 0.0)
        return DeviationBound(*_semidev_deviation(n, radius, family.order))
    raise ConfigurationError(f"deviation_sup does not support {type(family).__name__}")
