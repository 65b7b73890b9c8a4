"""Problem and solution containers for the exact solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE = -1
EQ = 0
GE = 1

_SENSE_TEXT = {LE: "<=", EQ: "==", GE: ">="}


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True)
class StandardFormLp:
    """min c @ x  subject to  a @ x (senses) b  and  lb <= x <= ub.

    senses holds one of LE (-1), EQ (0), GE (+1) per row.  a may be a dense
    ndarray or any scipy sparse matrix.  Bounds may be infinite; every other
    coefficient must be finite.
    """

    c: np.ndarray
    a: object
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        c = _as_float_array(self.c, "c")
        b = _as_float_array(self.b, "b")
        lb = _as_float_array(self.lb, "lb")
        ub = _as_float_array(self.ub, "ub")
        senses = np.asarray(self.senses, dtype=np.int8)
        a = self.a
        if not sp.issparse(a):
            a = np.asarray(a, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError("a must be a matrix")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "a", a)
        m, n = a.shape
        if n != c.size or n != lb.size or n != ub.size:
            raise ValueError("column count mismatch between a, c and bounds")
        if m != b.size or m != senses.size:
            raise ValueError("row count mismatch between a, b and senses")
        if n == 0:
            raise ValueError("LP needs at least one variable")
        if not np.all(np.isin(senses, (LE, EQ, GE))):
            raise ValueError("senses must be -1, 0 or +1")
        data = a.data if sp.issparse(a) else a
        if not np.all(np.isfinite(data)):
            raise ValueError("constraint matrix must be finite")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b))):
            raise ValueError("objective and rhs must be finite")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)):
            raise ValueError("bounds must not be NaN")
        if np.any(lb > ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    @property
    def n_vars(self) -> int:
        return self.a.shape[1]

    def dense_a(self) -> np.ndarray:
        if sp.issparse(self.a):
            return np.asarray(self.a.todense(), dtype=np.float64)
        return np.array(self.a, dtype=np.float64)


@dataclass
class LpSolution:
    """Solver result.  objective/x/duals are None unless status is optimal
    (branch and bound also fills them for the best incumbent on a timeout)."""

    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    engine: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


@dataclass(frozen=True)
class BinaryProgram:
    """max c @ x  subject to  a @ x <= b,  x binary (or relaxed to [0, 1]).

    `binary` marks which columns are integral; None means all of them.
    Non-binary columns are continuous on [0, 1], used for auxiliary
    assignment variables that are integral at optimality anyway.
    """

    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    binary: np.ndarray | None = None

    def __post_init__(self):
        c = _as_float_array(self.c, "c")
        b = _as_float_array(self.b, "b")
        a = np.asarray(self.a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("a must be a matrix")
        if a.shape[1] != c.size or a.shape[0] != b.size:
            raise ValueError("shape mismatch between a, b and c")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))
                and np.all(np.isfinite(c))):
            raise ValueError("binary program data must be finite")
        binary = self.binary
        if binary is None:
            binary = np.ones(c.size, dtype=bool)
        else:
            binary = np.asarray(binary, dtype=bool)
            if binary.size != c.size:
                raise ValueError("binary mask length mismatch")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "binary", binary)

    @property
    def n_vars(self) -> int:
        return self.c.size


def dump_lp(lp: StandardFormLp, stream) -> None:
    """Write an LP in a line-oriented text form, one constraint per line."""

    def terms(coefs, idx):
        parts = []
        for j, v in zip(idx, coefs):
            if v == 0.0:
                continue
            parts.append(f"{'+' if v >= 0 else '-'} {abs(v):.12g} x{j}")
        return " ".join(parts) if parts else "0"

    n = lp.n_vars
    stream.write(f"min: {terms(lp.c, range(n))}\n")
    a = lp.dense_a()
    for i in range(lp.n_rows):
        row = a[i]
        nz = np.nonzero(row)[0]
        stream.write(
            f"r{i}: {terms(row[nz], nz)} {_SENSE_TEXT[int(lp.senses[i])]} "
            f"{lp.b[i]:.12g}\n")
    for j in range(n):
        stream.write(f"b{j}: {lp.lb[j]:.12g} <= x{j} <= {lp.ub[j]:.12g}\n")
