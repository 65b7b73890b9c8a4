"""Compare the two simplex pivot kernels on identical problems.

The numba kernel and the vectorized numpy kernel follow the same pivot
rules, so they walk the same path and differ only in speed.  This bench
times both on random dense LPs and on real scheduling windows taken from
the default synthetic community, then prints a table.

Run:  python3 benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from microrh.model import WindowFix
from microrh.robust import (SCENARIOS, DynamicPvRamp, InfoState, realize,
                            robustify_window, sample_realization)
from microrh.solver import _kernels, warmup
from microrh.solver.simplex import solve_simplex
from microrh.solver.types import LE, StandardFormLp
from microrh.synth import generate_synthetic


def random_lp(rng, m, n):
    """Feasible bounded LP: interior point plus slack keeps phase 2 busy."""
    a = rng.normal(size=(m, n))
    x0 = rng.uniform(0.5, 1.5, n)
    b = a @ x0 + rng.uniform(0.1, 1.0, m)
    c = rng.normal(size=n)
    return StandardFormLp(c=c, a=a, senses=np.full(m, LE, dtype=np.int8),
                          b=b, lb=np.zeros(n), ub=np.full(n, 4.0))


def window_lp(instance, start):
    scenario = SCENARIOS["B"]
    real = realize(instance, scenario, sample_realization(instance, 0))
    soc = {b.battery_id: b.initial_soc_kwh for b in instance.batteries}
    soc |= {e.ev_id: e.initial_soc_kwh for e in instance.evs}
    lp = robustify_window(instance, (start, instance.grid.horizon_slots),
                          WindowFix(start_soc=soc), scenario,
                          InfoState(now=start, real=real), DynamicPvRamp())
    return lp.to_standard()


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, min(times) * 1e3


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 1
    rng = np.random.default_rng(42)

    cases = [(f"random {m}x{n}", random_lp(rng, m, n))
             for m, n in ((40, 60), (120, 180), (240, 360))]
    # windows sized within the range the simplex serves in production;
    # anything larger is dispatched to scipy instead of these kernels
    instance = generate_synthetic()
    for start in (264, 272, 280):
        cases.append((f"window t={start}", window_lp(instance, start)))

    backends = [("numpy", _kernels.pivot_loop_numpy)]
    if _kernels.HAS_NUMBA:
        warmup()
        backends.append(("numba", _kernels.pivot_loop_numba))
    else:
        print("numba not importable here, timing the numpy kernel only")

    width = max(len(name) for name, _ in cases)
    header = f"{'case':<{width}} {'rows':>5} {'cols':>5} {'pivots':>6}"
    for name, _ in backends:
        header += f" {name + ' ms':>9}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, lp in cases:
        sols, times = [], []
        for _, kernel in backends:
            sol, ms = best_of(
                lambda k=kernel: solve_simplex(lp, backend=k), repeats)
            sols.append(sol)
            times.append(ms)
        assert all(s.status == "optimal" for s in sols), name
        # same pivot rules, same path: objectives must agree tightly
        if len(sols) == 2:
            assert abs(sols[0].objective - sols[1].objective) < 1e-7, name
            assert sols[0].iterations == sols[1].iterations, name
        line = (f"{name:<{width}} {lp.n_rows:>5} {lp.n_vars:>5} "
                f"{sols[0].iterations:>6}")
        for ms in times:
            line += f" {ms:>9.2f}"
        if len(times) == 2:
            line += f" {times[0] / times[1]:>7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
