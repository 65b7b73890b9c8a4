"""Exact linear and binary solvers used throughout the package."""

from ._kernels import NUMBA_ENV_FLAG, active_backend, warmup
from .bnb import solve_binary
from .dispatch import solve_lp
from .simplex import solve_simplex
from .types import EQ, GE, LE, BinaryProgram, LpSolution, StandardFormLp, dump_lp

__all__ = [
    "BinaryProgram",
    "EQ",
    "GE",
    "LE",
    "LpSolution",
    "NUMBA_ENV_FLAG",
    "StandardFormLp",
    "active_backend",
    "dump_lp",
    "solve_binary",
    "solve_lp",
    "solve_simplex",
    "warmup",
]
