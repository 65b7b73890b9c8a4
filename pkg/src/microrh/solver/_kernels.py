"""Dense simplex pivot kernels.

Two interchangeable implementations of the bounded-variable pivot loop:
a numba-compiled version with explicit loops and a vectorized pure-numpy
version.  Both follow the exact same pivot selection rules (Dantzig pricing
with lowest-index tie breaks, switching to Bland's rule after a degenerate
stall) so they produce identical pivot sequences.

Backend selection happens once at import time: numba is used when it is
installed and the MICRORH_NO_NUMBA environment variable is unset or empty.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENV_FLAG = "MICRORH_NO_NUMBA"

# nonbasic-at-lower / nonbasic-at-upper / basic
AT_LOWER = 0
AT_UPPER = 1
BASIC = 2

# pivot loop exit codes
OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

# consecutive degenerate steps tolerated before Bland's rule takes over
STALL_LIMIT = 64

_DEGEN_TOL = 1e-11
_RATIO_TIE_TOL = 1e-12


def numba_disabled() -> bool:
    return os.environ.get(NUMBA_ENV_FLAG, "") != ""


HAS_NUMBA = False
if not numba_disabled():
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        HAS_NUMBA = False


def pivot_loop_numpy(T, xB, rc, basis, status, lb, ub, art_start, max_iter,
                     rc_tol, piv_tol):
    """Run bounded-variable simplex pivots until optimality of the phase.

    Mutates T, xB, rc, basis, status and ub (leaving artificials are fixed
    at zero) in place.  Returns (exit_code, iterations).
    """
    m, n = T.shape
    bland = False
    stall = 0
    it = 0
    fixed = (ub - lb) <= 0.0
    while it < max_iter:
        # price: a column may enter if moving it off its bound lowers cost
        score = np.where(status == AT_LOWER, -rc,
                         np.where(status == AT_UPPER, rc, -np.inf))
        score[fixed] = -np.inf
        if bland:
            cand = np.nonzero(score > rc_tol)[0]
            if cand.size == 0:
                return OPTIMAL, it
            q = int(cand[0])
        else:
            q = int(np.argmax(score))
            if score[q] <= rc_tol:
                return OPTIMAL, it
        it += 1

        sign = 1.0 if status[q] == AT_LOWER else -1.0
        colq = T[:, q]
        a = sign * colq
        t = np.full(m, np.inf)
        blo = lb[basis]
        bup = ub[basis]
        pos = a > piv_tol
        neg = a < -piv_tol
        t[pos] = (xB[pos] - blo[pos]) / a[pos]
        t[neg] = (xB[neg] - bup[neg]) / a[neg]
        np.maximum(t, 0.0, out=t)
        tmin = t.min() if m else np.inf
        theta_bound = ub[q] - lb[q]

        if theta_bound <= tmin:
            # entering variable runs to its opposite bound: no basis change
            if not np.isfinite(theta_bound):
                return UNBOUNDED, it
            if theta_bound > 0.0:
                xB -= theta_bound * sign * colq
            status[q] = AT_UPPER if status[q] == AT_LOWER else AT_LOWER
            theta = theta_bound
        else:
            if not np.isfinite(tmin):
                return UNBOUNDED, it
            ties = np.nonzero(t <= tmin + _RATIO_TIE_TOL)[0]
            r = int(ties[np.argmin(basis[ties])])
            leave_lower = a[r] > 0.0
            theta = tmin
            if theta > 0.0:
                xB -= theta * sign * colq
            lv = int(basis[r])
            status[lv] = AT_LOWER if leave_lower else AT_UPPER
            if lv >= art_start:
                ub[lv] = lb[lv]
                fixed[lv] = True
            piv = T[r, q]
            Trow = T[r, :]
            Trow /= piv
            factors = T[:, q].copy()
            factors[r] = 0.0
            T -= np.outer(factors, Trow)
            rc -= rc[q] * Trow
            T[:, q] = 0.0
            T[r, q] = 1.0
            rc[q] = 0.0
            xB[r] = (lb[q] + theta) if sign > 0 else (ub[q] - theta)
            basis[r] = q
            status[q] = BASIC

        if theta <= _DEGEN_TOL:
            stall += 1
            if stall > STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False
    return ITERATION_LIMIT, it


def _pivot_loop_loops(T, xB, rc, basis, status, lb, ub, art_start, max_iter,
                      rc_tol, piv_tol):
    m, n = T.shape
    bland = False
    stall = 0
    it = 0
    while it < max_iter:
        q = -1
        if bland:
            for j in range(n):
                if status[j] == BASIC or ub[j] - lb[j] <= 0.0:
                    continue
                s = -rc[j] if status[j] == AT_LOWER else rc[j]
                if s > rc_tol:
                    q = j
                    break
        else:
            best = rc_tol
            for j in range(n):
                if status[j] == BASIC or ub[j] - lb[j] <= 0.0:
                    continue
                s = -rc[j] if status[j] == AT_LOWER else rc[j]
                if s > best:
                    best = s
                    q = j
        if q < 0:
            return OPTIMAL, it
        it += 1

        sign = 1.0 if status[q] == AT_LOWER else -1.0
        tmin = np.inf
        for i in range(m):
            a = sign * T[i, q]
            if a > piv_tol:
                ti = (xB[i] - lb[basis[i]]) / a
            elif a < -piv_tol:
                ti = (xB[i] - ub[basis[i]]) / a
            else:
                continue
            if ti < 0.0:
                ti = 0.0
            if ti < tmin:
                tmin = ti
        theta_bound = ub[q] - lb[q]

        if theta_bound <= tmin:
            if not np.isfinite(theta_bound):
                return UNBOUNDED, it
            if theta_bound > 0.0:
                for i in range(m):
                    xB[i] -= theta_bound * sign * T[i, q]
            status[q] = AT_UPPER if status[q] == AT_LOWER else AT_LOWER
            theta = theta_bound
        else:
            if not np.isfinite(tmin):
                return UNBOUNDED, it
            r = -1
            rbas = 0
            for i in range(m):
                a = sign * T[i, q]
                if a > piv_tol:
                    ti = (xB[i] - lb[basis[i]]) / a
                elif a < -piv_tol:
                    ti = (xB[i] - ub[basis[i]]) / a
                else:
                    continue
                if ti < 0.0:
                    ti = 0.0
                if ti <= tmin + _RATIO_TIE_TOL:
                    if r < 0 or basis[i] < rbas:
                        r = i
                        rbas = basis[i]
            leave_lower = sign * T[r, q] > 0.0
            theta = tmin
            if theta > 0.0:
                for i in range(m):
                    xB[i] -= theta * sign * T[i, q]
            lv = basis[r]
            status[lv] = AT_LOWER if leave_lower else AT_UPPER
            if lv >= art_start:
                ub[lv] = lb[lv]
            piv = T[r, q]
            for j in range(n):
                T[r, j] /= piv
            rcq = rc[q]
            for i in range(m):
                if i == r:
                    continue
                f = T[i, q]
                if f != 0.0:
                    for j in range(n):
                        T[i, j] -= f * T[r, j]
            for j in range(n):
                rc[j] -= rcq * T[r, j]
            for i in range(m):
                T[i, q] = 0.0
            T[r, q] = 1.0
            rc[q] = 0.0
            xB[r] = (lb[q] + theta) if sign > 0 else (ub[q] - theta)
            basis[r] = q
            status[q] = BASIC

        if theta <= _DEGEN_TOL:
            stall += 1
            if stall > STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = False
    return ITERATION_LIMIT, it


pivot_loop_numba = None
if HAS_NUMBA:
    pivot_loop_numba = njit(cache=True)(_pivot_loop_loops)

pivot_loop = pivot_loop_numba if HAS_NUMBA else pivot_loop_numpy


def active_backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


def warmup() -> None:
    """Trigger JIT compilation on a toy problem so later solves run hot."""
    T = np.array([[1.0, 1.0]])
    xB = np.array([1.0])
    rc = np.array([-1.0, 0.0])
    basis = np.array([1], dtype=np.int64)
    status = np.array([AT_LOWER, BASIC], dtype=np.int8)
    lb = np.zeros(2)
    ub = np.array([np.inf, np.inf])
    pivot_loop(T, xB, rc, basis, status, lb, ub, 1, 10, 1e-9, 1e-10)
