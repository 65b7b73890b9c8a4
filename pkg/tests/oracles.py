"""Independent brute-force oracles used to validate the solvers and the
robust counterparts.  These deliberately avoid the package's own algorithms:
LPs are checked by enumerating polytope vertices, budget supports by
enumerating extreme points of the budget set, binary programs by exhaustive
enumeration.
"""

from __future__ import annotations

import itertools

import numpy as np

from microrh.solver import EQ, GE, LE, StandardFormLp


def lp_vertex_minimum(lp: StandardFormLp, feas_tol: float = 1e-7):
    """Minimum of c @ x over the polytope by enumerating candidate vertices.

    The polytope is rewritten as {x : G x <= h, E x == f} with finite bounds
    folded into G.  Every vertex is the solution of n active constraints,
    equalities always included.  Infeasible or singular active sets are
    skipped.  Returns (min_value, argmin) or (None, None) when no feasible
    vertex exists.  Exponential: only for small LPs.
    """
    n = lp.n_vars
    a = lp.dense_a()
    g_rows, h_vals = [], []
    e_rows, f_vals = [], []
    for i in range(lp.n_rows):
        s = int(lp.senses[i])
        if s == LE:
            g_rows.append(a[i])
            h_vals.append(lp.b[i])
        elif s == GE:
            g_rows.append(-a[i])
            h_vals.append(-lp.b[i])
        else:
            e_rows.append(a[i])
            f_vals.append(lp.b[i])
    eye = np.eye(n)
    for j in range(n):
        if np.isfinite(lp.ub[j]):
            g_rows.append(eye[j])
            h_vals.append(lp.ub[j])
        if np.isfinite(lp.lb[j]):
            g_rows.append(-eye[j])
            h_vals.append(-lp.lb[j])
    G = np.array(g_rows) if g_rows else np.zeros((0, n))
    h = np.array(h_vals) if h_vals else np.zeros(0)
    E = np.array(e_rows) if e_rows else np.zeros((0, n))
    f = np.array(f_vals) if f_vals else np.zeros(0)

    n_eq = E.shape[0]
    k = n - n_eq
    if k < 0:
        raise ValueError("more equalities than variables")
    combo_arr = np.array(list(itertools.combinations(range(G.shape[0]), k)),
                         dtype=np.intp).reshape(-1, k)
    best, best_x = np.inf, None
    chunk = 8192
    for lo in range(0, combo_arr.shape[0], chunk):
        combos = combo_arr[lo:lo + chunk]
        K = combos.shape[0]
        mats = np.empty((K, n, n))
        rhs = np.empty((K, n))
        if n_eq:
            mats[:, :n_eq, :] = E
            rhs[:, :n_eq] = f
        if k:
            mats[:, n_eq:, :] = G[combos]
            rhs[:, n_eq:] = h[combos]
        dets = np.abs(np.linalg.det(mats))
        ok = dets > 1e-9
        if not np.any(ok):
            continue
        sols = np.full((K, n), np.nan)
        sols[ok] = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
        if G.shape[0]:
            with np.errstate(invalid="ignore"):
                feas = np.all(sols @ G.T <= h + feas_tol, axis=1)
        else:
            feas = np.ones(K, dtype=bool)
        feas &= ok
        if n_eq:
            feas &= np.all(np.abs(sols @ E.T - f) <= feas_tol, axis=1)
        if not np.any(feas):
            continue
        vals = sols[feas] @ lp.c
        t = int(np.argmin(vals))
        if vals[t] < best:
            best = float(vals[t])
            best_x = sols[feas][t]
    if best_x is None:
        return None, None
    return best, best_x


def budget_support_bruteforce(coeffs, gamma: float) -> float:
    """max sum(coeffs * m) over {0 <= m <= 1, sum(m) <= gamma} by
    enumerating extreme points: subsets at one plus at most a single
    fractional coordinate."""
    a = np.asarray(coeffs, dtype=float)
    n = a.size
    whole = int(np.floor(gamma))
    frac = gamma - whole
    best = 0.0
    for r in range(0, min(whole, n) + 1):
        for subset in itertools.combinations(range(n), r):
            base = float(a[list(subset)].sum()) if subset else 0.0
            if base > best:
                best = base
            if frac > 0.0 and r == whole:
                for j in range(n):
                    if j in subset:
                        continue
                    v = base + frac * float(a[j])
                    if v > best:
                        best = v
    return best


def binary_max_bruteforce(c, a, b):
    """Exhaustive maximum of c @ x over binary x with a @ x <= b."""
    c = np.asarray(c, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    n = c.size
    best, best_x = -np.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=n):
        x = np.array(bits)
        if np.all(a @ x <= b + 1e-9):
            v = float(c @ x)
            if v > best:
                best, best_x = v, x
    return best, best_x
