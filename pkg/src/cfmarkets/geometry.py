"""Small dense linear-feasibility helpers over vertex hulls.

Everything here works on an explicit vertex list V (n x K): convex weight
recovery, maximal off-face weight, separating directions, and minimum-value
convex combinations. Instances are desk-scale, so a dense LP per query is fine.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

DEFAULT_TOL = 1e-9


def best_hull_weights(vertices: np.ndarray, mu: np.ndarray):
    """Convex weights over `vertices` minimizing the L-inf reconstruction error.

    Returns (weights, residual). Always feasible: the slack variable absorbs
    any mismatch, so `residual` tells the caller how far mu is from the hull.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    mu = np.asarray(mu, dtype=float)
    n, k = V.shape
    if n == 1:
        return np.array([1.0]), float(np.max(np.abs(V[0] - mu), initial=0.0))
    # variables: [lambda (n), s (1)]; minimize s with |V^T lam - mu| <= s
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.zeros((2 * k, n + 1))
    b_ub = np.zeros(2 * k)
    a_ub[:k, :n] = V.T
    a_ub[:k, -1] = -1.0
    b_ub[:k] = mu
    a_ub[k:, :n] = -V.T
    a_ub[k:, -1] = -1.0
    b_ub[k:] = -mu
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (n + 1), method="highs")
    if not res.success:  # pragma: no cover - the slack makes this feasible
        raise RuntimeError(f"hull weight LP failed: {res.message}")
    lam = np.clip(res.x[:n], 0.0, None)
    lam /= lam.sum()
    residual = float(np.max(np.abs(V.T @ lam - mu), initial=0.0))
    return lam, residual


def hull_weights(vertices, mu, tol: float = DEFAULT_TOL):
    """Convex weights reconstructing mu within tol, or None if infeasible."""
    lam, residual = best_hull_weights(vertices, mu)
    if residual > tol:
        return None
    return lam


def hull_contains(vertices, mu, tol: float = DEFAULT_TOL) -> bool:
    return hull_weights(vertices, mu, tol) is not None


def max_outside_weight(vertices: np.ndarray, inside: np.ndarray, mu,
                       tol: float = DEFAULT_TOL):
    """Largest total weight outside the marked vertex subset over all convex
    decompositions of mu. Returns None when mu is not in the hull at all.

    `inside` is a boolean mask over vertex rows.
    """
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    mu = np.asarray(mu, dtype=float)
    n, k = V.shape
    c = np.where(np.asarray(inside, dtype=bool), 0.0, -1.0)
    a_ub = np.vstack([V.T, -V.T])
    b_ub = np.concatenate([mu + tol, -mu + tol])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if not res.success:
        return None
    return float(-res.fun)


def min_weighted_value(points: np.ndarray, values: np.ndarray, mu,
                       tol: float = DEFAULT_TOL):
    """Minimize sum(w * values) over convex weights w with P^T w = mu (+- tol).

    Returns (min_value, weights) or None when mu is not in the hull of points.
    Non-finite values drop their points from the program.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v)
    if not keep.any():
        return None
    P, v = P[keep], v[keep]
    n, k = P.shape
    a_ub = np.vstack([P.T, -P.T])
    mu = np.asarray(mu, dtype=float)
    b_ub = np.concatenate([mu + tol, -mu + tol])
    res = linprog(v, A_ub=a_ub, b_ub=b_ub, A_eq=np.ones((1, n)), b_eq=[1.0],
                  bounds=[(0, None)] * n, method="highs")
    if not res.success:
        return None
    w = np.zeros(keep.shape[0])
    w[keep] = np.clip(res.x, 0.0, None)
    return float(res.fun), w


def separating_direction(inside_points: np.ndarray, outside_points: np.ndarray,
                         margin: float = 1.0):
    """Direction v with v.p constant on inside_points and at least `margin`
    above every outside point. Returns (v, margin) or None if infeasible.

    Among feasible v the L1-smallest is returned, which keeps witnesses tidy.
    """
    P_in = np.atleast_2d(np.asarray(inside_points, dtype=float))
    P_out = np.atleast_2d(np.asarray(outside_points, dtype=float))
    k = P_in.shape[1]
    if P_out.size == 0:
        return np.zeros(k), margin
    # variables: [v (k), c (1), u (k)]; minimize sum u, |v| <= u
    n_var = 2 * k + 1
    c_obj = np.zeros(n_var)
    c_obj[k + 1:] = 1.0
    a_eq = np.zeros((P_in.shape[0], n_var))
    a_eq[:, :k] = P_in
    a_eq[:, k] = -1.0
    b_eq = np.zeros(P_in.shape[0])
    rows = []
    rhs = []
    for p in P_out:
        row = np.zeros(n_var)
        row[:k] = p
        row[k] = -1.0
        rows.append(row)
        rhs.append(-margin)
    for i in range(k):
        row = np.zeros(n_var)
        row[i] = 1.0
        row[k + 1 + i] = -1.0
        rows.append(row)
        rhs.append(0.0)
        row = np.zeros(n_var)
        row[i] = -1.0
        row[k + 1 + i] = -1.0
        rows.append(row)
        rhs.append(0.0)
    bounds = [(None, None)] * (k + 1) + [(0, None)] * k
    res = linprog(c_obj, A_ub=np.array(rows), b_ub=np.array(rhs),
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        return None
    return res.x[:k].copy(), margin


def hulls_intersect(vertices_a: np.ndarray, vertices_b: np.ndarray,
                    tol: float = DEFAULT_TOL) -> bool:
    """Whether two vertex hulls share a point (within tol)."""
    A = np.atleast_2d(np.asarray(vertices_a, dtype=float))
    B = np.atleast_2d(np.asarray(vertices_b, dtype=float))
    na, k = A.shape
    nb = B.shape[0]
    # variables: [lam_a, lam_b, s]; minimize s with |A^T la - B^T lb| <= s
    n_var = na + nb + 1
    c = np.zeros(n_var)
    c[-1] = 1.0
    a_ub = np.zeros((2 * k, n_var))
    a_ub[:k, :na] = A.T
    a_ub[:k, na:na + nb] = -B.T
    a_ub[:k, -1] = -1.0
    a_ub[k:, :na] = -A.T
    a_ub[k:, na:na + nb] = B.T
    a_ub[k:, -1] = -1.0
    a_eq = np.zeros((2, n_var))
    a_eq[0, :na] = 1.0
    a_eq[1, na:na + nb] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(2 * k), A_eq=a_eq,
                  b_eq=[1.0, 1.0], bounds=[(0, None)] * n_var, method="highs")
    if not res.success:  # pragma: no cover
        raise RuntimeError(f"hull intersection LP failed: {res.message}")
    return float(res.x[-1]) <= tol
