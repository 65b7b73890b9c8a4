"""Two-phase bounded-variable primal simplex on a dense tableau.

Variable bounds are handled implicitly (nonbasic columns rest at a finite
bound, pivots may terminate in a bound flip), so only genuine constraint
rows enter the tableau.  Phase one starts from an all-artificial basis;
artificials are pinned to zero once they leave.  Pricing is Dantzig with
lowest-index tie breaks and falls back to Bland's rule after a degenerate
stall, which rules out cycling.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from ._kernels import AT_LOWER, AT_UPPER, BASIC, ITERATION_LIMIT, OPTIMAL, UNBOUNDED
from .types import EQ, GE, LE, LpSolution, StandardFormLp


def _box_only_solution(lp: StandardFormLp, engine: str) -> LpSolution:
    # no rows: each variable independently sits at the bound favored by c
    x = np.where(lp.c > 0, lp.lb, np.where(lp.c < 0, lp.ub, lp.lb))
    x = np.where(np.isfinite(x), x, np.where(np.isfinite(lp.lb), lp.lb, lp.ub))
    if not np.all(np.isfinite(x[lp.c == 0])):
        x[~np.isfinite(x)] = 0.0
    if not np.all(np.isfinite(x)):
        return LpSolution(status="unbounded", engine=engine)
    return LpSolution(status="optimal", objective=float(lp.c @ x), x=x,
                      duals=np.zeros(0), iterations=0, engine=engine)


def solve_simplex(lp: StandardFormLp, *, feas_tol: float = 1e-7,
                  rc_tol: float = 1e-9, max_iter: int | None = None,
                  backend=None) -> LpSolution:
    """Solve an LP with the in-package simplex.  backend overrides the
    module-selected pivot kernel (used by tests and benchmarks)."""
    if backend is None:
        backend = _kernels.pivot_loop
        engine = f"simplex-{_kernels.active_backend()}"
    else:
        engine = "simplex-custom"
    m, n = lp.n_rows, lp.n_vars
    if m == 0:
        return _box_only_solution(lp, engine)

    a = lp.dense_a()
    c = lp.c.copy()
    lb = lp.lb.copy()
    ub = lp.ub.copy()

    # split doubly-free columns x = x+ - x-
    free = np.nonzero(~np.isfinite(lb) & ~np.isfinite(ub))[0]
    if free.size:
        a = np.hstack([a, -a[:, free]])
        c = np.concatenate([c, -c[free]])
        lb = np.concatenate([lb, np.zeros(free.size)])
        ub = np.concatenate([ub, np.full(free.size, np.inf)])
        lb[free] = 0.0

    n_struct = a.shape[1]
    senses = lp.senses
    ineq = np.nonzero(senses != EQ)[0]
    n_slack = ineq.size
    art_start = n_struct + n_slack
    n_ext = art_start + m

    cols = np.zeros((m, n_ext))
    cols[:, :n_struct] = a
    for k, i in enumerate(ineq):
        cols[i, n_struct + k] = 1.0 if senses[i] == LE else -1.0

    lb_ext = np.concatenate([lb, np.zeros(n_slack + m)])
    ub_ext = np.concatenate([ub, np.full(n_slack + m, np.inf)])

    status = np.empty(n_ext, dtype=np.int8)
    at_lower = np.isfinite(lb_ext)
    status[:] = np.where(at_lower, AT_LOWER, AT_UPPER)
    x_init = np.where(at_lower, lb_ext, ub_ext)
    x_init[art_start:] = 0.0

    resid = lp.b - cols[:, :art_start] @ x_init[:art_start]
    sigma = np.where(resid >= 0.0, 1.0, -1.0)
    T = sigma[:, None] * cols
    T[:, art_start:] = np.eye(m)
    xB = np.abs(resid)
    basis = np.arange(art_start, n_ext, dtype=np.int64)
    status[art_start:] = BASIC

    if max_iter is None:
        max_iter = 2000 + 200 * (m + n_ext)
    piv_tol = 1e-10

    # phase one: minimize the artificial mass
    rc1 = -T.sum(axis=0)
    rc1[art_start:] = 0.0
    code, it1 = backend(T, xB, rc1, basis, status, lb_ext, ub_ext,
                        art_start, max_iter, rc_tol, piv_tol)
    if code == ITERATION_LIMIT:
        raise RuntimeError("simplex phase one hit the iteration limit")
    if code == UNBOUNDED:
        raise RuntimeError("phase one reported unbounded: numerical trouble")
    infeas = float(xB[basis >= art_start].sum()) if m else 0.0
    if infeas > feas_tol:
        return LpSolution(status="infeasible", iterations=it1, engine=engine)
    ub_ext[art_start:] = 0.0

    # phase two: real costs
    c_ext = np.zeros(n_ext)
    c_ext[:n_struct] = c
    rc2 = c_ext.copy()
    for i in range(m):
        cb = c_ext[basis[i]]
        if cb != 0.0:
            rc2 -= cb * T[i]
    code, it2 = backend(T, xB, rc2, basis, status, lb_ext, ub_ext,
                        art_start, max_iter, rc_tol, piv_tol)
    if code == ITERATION_LIMIT:
        raise RuntimeError("simplex phase two hit the iteration limit")
    iters = it1 + it2
    if code == UNBOUNDED:
        return LpSolution(status="unbounded", iterations=iters, engine=engine)

    x_ext = np.where(status == AT_UPPER, ub_ext, lb_ext)
    x_ext[basis] = xB
    x = np.array(x_ext[:n])
    for k, j in enumerate(free):
        x[j] = x_ext[j] - x_ext[n + k]

    duals = np.empty(m)
    slack_of = {int(i): n_struct + k for k, i in enumerate(ineq)}
    for i in range(m):
        s = int(senses[i])
        if s == LE:
            duals[i] = -rc2[slack_of[i]]
        elif s == GE:
            duals[i] = rc2[slack_of[i]]
        else:
            duals[i] = -sigma[i] * rc2[art_start + i]

    obj = float(lp.c @ x)
    return LpSolution(status="optimal", objective=obj, x=x, duals=duals,
                      iterations=iters, engine=engine)
