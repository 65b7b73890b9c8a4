"""Engine selection for LP solves.

The in-package simplex is exact, deterministic and fully oracle-tested, but
its dense tableau does not scale to full-size scheduling windows (several
thousand rows).  Large problems are therefore routed to scipy's HiGHS
backend, which is deterministic for a fixed input.  `engine="auto"` picks
by tableau size; tests pin the engine explicitly where it matters.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .simplex import solve_simplex
from .types import EQ, GE, LE, LpSolution, StandardFormLp

# dense tableau entry budget for the auto engine (about 48 MB of float64)
AUTO_DENSE_LIMIT = 6_000_000
AUTO_ROW_LIMIT = 1200


def _solve_highs(lp: StandardFormLp, feas_tol: float) -> LpSolution:
    senses = lp.senses
    le_rows = np.nonzero(senses == LE)[0]
    ge_rows = np.nonzero(senses == GE)[0]
    eq_rows = np.nonzero(senses == EQ)[0]
    a = lp.a if sp.issparse(lp.a) else sp.csr_matrix(lp.a)
    a = a.tocsr()

    blocks, rhs = [], []
    if le_rows.size:
        blocks.append(a[le_rows])
        rhs.append(lp.b[le_rows])
    if ge_rows.size:
        blocks.append(-a[ge_rows])
        rhs.append(-lp.b[ge_rows])
    a_ub = sp.vstack(blocks, format="csr") if blocks else None
    b_ub = np.concatenate(rhs) if rhs else None
    a_eq = a[eq_rows] if eq_rows.size else None
    b_eq = lp.b[eq_rows] if eq_rows.size else None

    bounds = np.column_stack([lp.lb, lp.ub])
    res = linprog(lp.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": feas_tol})
    nit = int(getattr(res, "nit", 0))
    if res.status == 2:
        return LpSolution(status="infeasible", iterations=nit, engine="highs")
    if res.status == 3:
        return LpSolution(status="unbounded", iterations=nit, engine="highs")
    if not res.success:
        raise RuntimeError(f"HiGHS failed: {res.message}")

    duals = np.empty(lp.n_rows)
    if le_rows.size or ge_rows.size:
        marg = res.ineqlin.marginals
        k = 0
        if le_rows.size:
            duals[le_rows] = marg[:le_rows.size]
            k = le_rows.size
        if ge_rows.size:
            duals[ge_rows] = -marg[k:]
    if eq_rows.size:
        duals[eq_rows] = res.eqlin.marginals
    return LpSolution(status="optimal", objective=float(res.fun), x=res.x,
                      duals=duals, iterations=nit, engine="highs")


def _tableau_entries(lp: StandardFormLp) -> int:
    m, n = lp.n_rows, lp.n_vars
    n_ineq = int(np.count_nonzero(lp.senses != EQ))
    return m * (n + n_ineq + m)


def solve_lp(lp: StandardFormLp, *, engine: str = "auto",
             feas_tol: float = 1e-7, rc_tol: float = 1e-9,
             max_iter: int | None = None) -> LpSolution:
    """Solve min c@x s.t. a@x (senses) b, lb <= x <= ub.

    engine: "simplex" (in-package dense tableau), "highs" (scipy), or
    "auto" which uses the simplex whenever the tableau stays small.
    """
    if engine == "auto":
        small = (lp.n_rows <= AUTO_ROW_LIMIT
                 and _tableau_entries(lp) <= AUTO_DENSE_LIMIT)
        engine = "simplex" if small else "highs"
    if engine == "simplex":
        return solve_simplex(lp, feas_tol=feas_tol, rc_tol=rc_tol,
                             max_iter=max_iter)
    if engine == "highs":
        return _solve_highs(lp, feas_tol)
    raise ValueError(f"unknown LP engine: {engine!r}")
