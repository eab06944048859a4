"""Independent brute-force oracles shared by the unit and acceptance tests."""

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from covar_dro.core import CostSpec, FeasibleSet
from covar_dro.dro import CVaRSet, Hellinger, MeanUpperSemidev, Variation


def random_cost(rng, K=None, dy=None, dz=2):
    K = int(rng.integers(1, 4)) if K is None else K
    dy = int(rng.integers(1, 4)) if dy is None else dy
    return CostSpec(rng.normal(size=K), rng.normal(size=(K, dz)), rng.normal(size=(K, dy, dz)),
                    rng.normal(size=(K, dy)))


def box(dim=2, lo=-1.0, hi=1.0):
    return FeasibleSet(np.full(dim, lo), np.full(dim, hi))


def random_instance(rng, n=None, K=None, dy=None):
    cost = random_cost(rng, K, dy)
    n = int(rng.integers(1, 6)) if n is None else n
    return cost, box(), rng.normal(size=(n, cost.dim_outcome))


# --- simplex grid for n = 3 ----------------------------------------------------------


def simplex_grid(step=1e-3):
    m = int(round(1 / step))
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, m - i - j]) / m


def in_family(family, P, tol=1e-12):
    n = P.shape[1]
    if isinstance(family, CVaRSet):
        return np.all(P <= 1 / (n * (1 - family.radius)) + tol, axis=1)
    if isinstance(family, Variation):
        return np.abs(P - 1 / n).sum(axis=1) <= family.radius + tol
    if isinstance(family, Hellinger):
        return np.mean((np.sqrt(n * P) - 1) ** 2, axis=1) <= family.radius + tol
    if isinstance(family, MeanUpperSemidev):
        # p = (1 + q - mean(q)) / n with q >= 0; the smallest such q is n (p - min p)
        Q = n * (P - P.min(axis=1, keepdims=True))
        b = family.dual_order
        norm = Q.max(axis=1) if math.isinf(b) else (Q ** b).sum(axis=1) ** (1 / b)
        return norm <= family.radius + tol
    raise TypeError(family)


def grid_sup(family, u, grid):
    mask = in_family(family, grid)
    return float((grid[mask] @ u).max())


# --- CVaR DRO as one LP ----------------------------------------------------------------


def cvar_dro_monolithic(cost, Z, Y, radius):
    """``min_z min_eta eta + cap * sum_i (c(z, y_i) - eta)_+`` as a single LP."""
    n = Y.shape[0]
    cap = 1 / (n * (1 - radius))
    K, dz = cost.n_pieces, Z.dim
    # variables: z, u (n), eta, s (n)
    nv = dz + n + 1 + n
    A, b = [], []
    for i in range(n):
        for k in range(K):
            row = np.zeros(nv)
            row[:dz] = cost.e[k] + Y[i] @ cost.F[k]
            row[dz + i] = -1
            A.append(row)
            b.append(-(cost.d[k] + Y[i] @ cost.g[k]))
        row = np.zeros(nv)
        row[dz + i] = 1
        row[dz + n] = -1
        row[dz + n + 1 + i] = -1
        A.append(row)
        b.append(0.0)
    c = np.zeros(nv)
    c[dz + n] = 1
    c[dz + n + 1:] = cap
    bounds = list(zip(Z.lb, Z.ub)) + [(None, None)] * (n + 1) + [(0, None)] * n
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


def wasserstein_grid_min(cost, Y, radius, step=1e-3):
    """Minimize ``SAA(z) + radius * max_k |F_k z + g_k|_inf`` over a grid of [-1, 1]^2."""
    ticks = np.linspace(-1, 1, int(round(2 / step)) + 1)
    best = np.inf
    for z1 in np.array_split(ticks, 20):
        Z = np.stack(np.meshgrid(z1, ticks, indexing="ij"), -1).reshape(-1, 2)
        # pieces[m, i, k] at grid point m, scenario i, piece k
        lin = cost.d[None, :] + Z @ cost.e.T
        slopes = np.einsum("kyz,mz->mky", cost.F, Z) + cost.g[None]
        vals = lin[:, None, :] + np.einsum("iy,mky->mik", Y, slopes)
        saa = vals.max(axis=2).mean(axis=1)
        lip = np.abs(slopes).max(axis=(1, 2))
        best = min(best, float((saa + radius * lip).min()))
    return best


# --- polytope vertices via random linear objectives ----------------------------------


def variation_vertices_lifted(n, radius, draws=400, seed=0):
    """Vertices of ``{p in simplex : |p - 1/n|_1 <= radius}`` found as LP optima.

    The lifted polytope is ``p = 1/n + a - b`` with ``a, b >= 0`` and
    ``sum(a + b) <= radius``. Each random objective picks out a vertex; all
    vertices of this small polytope are hit with high probability.
    """
    rng = np.random.default_rng(seed)
    A_eq = np.r_[np.ones(n), -np.ones(n)][None, :]
    A_ub = np.vstack([np.ones(2 * n), np.hstack([-np.eye(n), np.eye(n)])])
    b_ub = np.r_[radius, np.full(n, 1 / n)]
    out = []
    for _ in range(draws):
        g = rng.normal(size=n)
        res = linprog(np.r_[-g, g], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[0.0],
                      bounds=(0, None), method="highs")
        out.append(1 / n + res.x[:n] - res.x[n:])
    for perm_src in list(out):
        for perm in itertools.permutations(range(n)):
            out.append(perm_src[list(perm)])
    return np.array(out)
