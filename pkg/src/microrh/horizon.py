"""Rolling-horizon simulation.

A schedule is a set of re-planning start slots.  At each start the engine
builds the window LP over the remaining horizon (committed day-ahead hours
fixed, device states at their realized values), solves it, commits any
day-ahead hours whose submission falls on this start, then executes the
plan until the next start against the realized outcome.  Planned market
quantities settle at realized prices; any slot whose realized load exceeds
the delivered supply buys the difference at the realized intraday price,
and surplus is spilled without revenue.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DecisionSet, MicrogridInstance, TimeGrid, WindowFix, evaluate_actual_cost,
)
from .robust import (
    DynamicPvRamp, InfoState, Realization, ScenarioConfig, realize,
    robustify_window, sample_realization,
)
from .solver import solve_lp

SOC_TOL = 1e-6


@dataclass(frozen=True)
class StartSchedule:
    """Re-planning slots plus the day-ahead commitment plan.  da_plan maps
    a start slot to the days whose hourly positions it commits."""

    start_slots: tuple[int, ...]
    da_plan: dict[int, tuple[int, ...]]
    label: str = ""
    gains: dict[int, float] | None = None  # marginal values, if selected

    def __post_init__(self):
        starts = tuple(int(s) for s in self.start_slots)
        object.__setattr__(self, "start_slots", starts)
        if not starts or starts[0] != 0:
            raise ValueError("schedules must start at slot 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("start slots must be strictly increasing")
        days = [d for ds in self.da_plan.values() for d in ds]
        if len(days) != len(set(days)):
            raise ValueError("a day is committed more than once")
        start_set = set(starts)
        for s, ds in self.da_plan.items():
            if s not in start_set:
                raise ValueError(f"commitment slot {s} is not a start slot")

    @property
    def n_starts(self) -> int:
        return len(self.start_slots)

    @property
    def forced_da_slots(self) -> tuple[int, ...]:
        return tuple(sorted(self.da_plan))

    @property
    def static(self) -> bool:
        return len(self.start_slots) == 1

    def check_against(self, grid: TimeGrid) -> None:
        if self.start_slots[-1] >= grid.horizon_slots:
            raise ValueError("start slot beyond the horizon")
        days = sorted(d for ds in self.da_plan.values() for d in ds)
        if days != list(range(grid.n_days)):
            raise ValueError("day-ahead plan must commit every day once")
        for s, ds in self.da_plan.items():
            for d in ds:
                if s > d * grid.slots_per_day:
                    raise ValueError(
                        f"day {d} would be committed after it starts")


def standard_da_plan(grid: TimeGrid) -> dict[int, tuple[int, ...]]:
    """Day 0 at slot 0 (bootstrap), each later day at the preceding noon."""
    plan = {0: (0,)}
    for d in range(1, grid.n_days):
        plan[(d - 1) * grid.slots_per_day + grid.noon_offset] = (d,)
    return plan


def full_schedule(grid: TimeGrid) -> StartSchedule:
    """One window over the whole horizon, every day committed up front."""
    return StartSchedule(start_slots=(0,),
                         da_plan={0: tuple(range(grid.n_days))},
                         label="full")


def classical_schedule(grid: TimeGrid, step) -> StartSchedule:
    """Evenly spaced starts.  The step must divide the noon offset so that
    submissions land on starts; a step of one day re-plans exactly at the
    submission slots.  The sentinel "full" gives the single static window."""
    if step == "full":
        return full_schedule(grid)
    step = int(step)
    plan = standard_da_plan(grid)
    if step == grid.slots_per_day:
        starts = tuple(sorted(plan))
    elif 1 <= step <= grid.noon_offset and grid.noon_offset % step == 0:
        starts = tuple(range(0, grid.horizon_slots, step))
    else:
        raise ValueError(
            f"step {step} does not align with day-ahead submission slots")
    return StartSchedule(start_slots=starts, da_plan=plan,
                         label=f"classical-{step}")


@dataclass(eq=False)
class SimulationReport:
    scenario: str
    seed: int
    label: str
    decisions: DecisionSet
    cost_eur: float
    market_eur: float
    settlement_eur: float
    pv_used_kwh: float
    pv_realized_kwh: float
    pv_usage_pct: float
    bought_kwh: float
    sold_kwh: float
    net_bought_kwh: float
    shortfall_slots: int
    shortfall_kwh: float
    spilled_kwh: float
    iterations: int
    n_windows: int
    wall_ms: float
    windows: list = field(default_factory=list)
    trace: dict | None = None


def _commit_day_ahead(x, lp, grid, days, fixed_buy, fixed_sell) -> None:
    # one price serves both directions, so gross buy/sell cycles can be
    # cost neutral; commit the net position only
    for day in days:
        for h in grid.day_hours(day):
            col_b = lp.blocks["da_buy"].get(h)
            col_s = lp.blocks["da_sell"].get(h)
            net = 0.0
            if col_b is not None:
                net += float(x[col_b])
            if col_s is not None:
                net -= float(x[col_s])
            fixed_buy[h] = max(net, 0.0)
            fixed_sell[h] = max(-net, 0.0)


def run(instance: MicrogridInstance, scenario: ScenarioConfig,
        schedule: StartSchedule, seed: int, *, engine: str = "auto",
        ramp: DynamicPvRamp | None = None, keep_trace: bool = True,
        draw: Realization | None = None) -> SimulationReport:
    """Simulate one seeded outcome under the given re-planning schedule."""
    t_begin = time.perf_counter()
    grid = instance.grid
    T = grid.horizon_slots
    per_hour = grid.slots_per_hour
    schedule.check_against(grid)
    if ramp is None:
        ramp = DynamicPvRamp()
    if draw is None:
        draw = sample_realization(instance, seed)
    real = realize(instance, scenario, draw)

    n_pv = len(instance.pv_systems)
    n_bat = len(instance.batteries)
    n_ev = len(instance.evs)

    # realized trip demand lands on the EV state at the actual arrival slot
    ev_demand = np.zeros((n_ev, T))
    for e in range(n_ev):
        for dep, arr, dem in real.trips[e]:
            ev_demand[e, arr] += dem

    dec = DecisionSet.zeros(instance)
    soc = {b.battery_id: b.initial_soc_kwh for b in instance.batteries}
    soc.update({e.ev_id: e.initial_soc_kwh for e in instance.evs})
    fixed_buy: dict[int, float] = {}
    fixed_sell: dict[int, float] = {}

    supply_trace = np.zeros(T)
    shortfall = np.zeros(T)
    spill = np.zeros(T)
    pv_used_slot = np.zeros(T)
    bat_soc_trace = np.zeros((n_bat, T))
    ev_soc_trace = np.zeros((n_ev, T))

    iterations = 0
    windows_info = []
    starts = schedule.start_slots
    for w_idx, s in enumerate(starts):
        nxt = starts[w_idx + 1] if w_idx + 1 < len(starts) else T
        fix = WindowFix(da_buy=dict(fixed_buy), da_sell=dict(fixed_sell),
                        start_soc=dict(soc))
        lp = robustify_window(instance, (s, T), fix, scenario,
                              InfoState(now=s, real=real), ramp)
        std = lp.to_standard()
        sol = solve_lp(std, engine=engine)
        if not sol.is_optimal:
            raise RuntimeError(
                f"window at slot {s} came back {sol.status}")
        iterations += sol.iterations
        windows_info.append({
            "start": s, "exec_end": nxt, "rows": std.n_rows,
            "cols": std.n_vars, "iterations": sol.iterations,
            "engine": sol.engine})
        x = sol.x
        blocks = lp.blocks

        _commit_day_ahead(x, lp, grid, schedule.da_plan.get(s, ()),
                          fixed_buy, fixed_sell)

        for t in range(s, nxt):
            i = t - s
            h = grid.hour_of(t)
            id_b = max(0.0, float(x[blocks["id_buy"][i]]))
            id_s = max(0.0, float(x[blocks["id_sell"][i]]))
            dec.id_buy[t] = id_b
            dec.id_sell[t] = id_s

            pv_sum = 0.0
            for j in range(n_pv):
                used = min(float(x[blocks["pv"][j, i]]), real.pv[j, t])
                used = max(0.0, used)
                dec.pv_used[j, t] = used
                pv_sum += used
            pv_used_slot[t] = pv_sum

            flex = 0.0
            for k, bat in enumerate(instance.batteries):
                c = max(0.0, float(x[blocks["bat_c"][k, i]]))
                d = max(0.0, float(x[blocks["bat_d"][k, i]]))
                dec.bat_charge[k, t] = c
                dec.bat_discharge[k, t] = d
                flex += d - c
                level = soc[bat.battery_id] \
                    + bat.charge_eff * c - d / bat.discharge_eff
                if not (-SOC_TOL <= level <= bat.capacity_kwh + SOC_TOL):
                    raise RuntimeError(
                        f"battery {bat.battery_id} leaves [0, capacity] "
                        f"at slot {t}")
                soc[bat.battery_id] = min(max(level, 0.0), bat.capacity_kwh)
                bat_soc_trace[k, t] = soc[bat.battery_id]
            for e, ev in enumerate(instance.evs):
                c = max(0.0, float(x[blocks["ev_c"][e, i]]))
                d = max(0.0, float(x[blocks["ev_d"][e, i]]))
                dec.ev_charge[e, t] = c
                dec.ev_discharge[e, t] = d
                flex += d - c
                level = soc[ev.ev_id] + ev.charge_eff * c \
                    - d / ev.discharge_eff - ev_demand[e, t]
                if not (-SOC_TOL <= level <= ev.capacity_kwh + SOC_TOL):
                    raise RuntimeError(
                        f"EV {ev.ev_id} leaves [0, capacity] at slot {t}")
                soc[ev.ev_id] = min(max(level, 0.0), ev.capacity_kwh)
                ev_soc_trace[e, t] = soc[ev.ev_id]

            da_net = (fixed_buy.get(h, 0.0) - fixed_sell.get(h, 0.0)) \
                / per_hour
            supplied = da_net + id_b - id_s + pv_sum + flex
            need = float(real.load_total[t])
            supply_trace[t] = supplied
            if supplied < need:
                shortfall[t] = need - supplied
            else:
                spill[t] = supplied - need

    for h, v in fixed_buy.items():
        dec.da_buy[h] = v
    for h, v in fixed_sell.items():
        dec.da_sell[h] = v

    market = evaluate_actual_cost(dec, real.prices())
    settlement = float(shortfall @ real.id_buy)
    pv_realized = float(real.pv.sum()) if n_pv else 0.0
    pv_used = float(dec.pv_used.sum())
    bought = float(dec.da_buy.sum() + dec.id_buy.sum() + shortfall.sum())
    sold = float(dec.da_sell.sum() + dec.id_sell.sum())

    trace = None
    if keep_trace:
        trace = {
            "load_kwh": real.load_total.copy(),
            "supply_kwh": supply_trace,
            "shortfall_kwh": shortfall.copy(),
            "spilled_kwh": spill.copy(),
            "pv_available_kwh": real.pv.sum(axis=0) if n_pv else np.zeros(T),
            "pv_used_kwh": pv_used_slot,
            "bat_soc_kwh": bat_soc_trace,
            "ev_soc_kwh": ev_soc_trace,
        }

    return SimulationReport(
        scenario=scenario.name, seed=seed, label=schedule.label,
        decisions=dec,
        cost_eur=market + settlement,
        market_eur=market, settlement_eur=settlement,
        pv_used_kwh=pv_used, pv_realized_kwh=pv_realized,
        pv_usage_pct=(100.0 * pv_used / pv_realized if pv_realized > 0
                      else 100.0),
        bought_kwh=bought, sold_kwh=sold, net_bought_kwh=bought - sold,
        shortfall_slots=int(np.count_nonzero(shortfall > 1e-9)),
        shortfall_kwh=float(shortfall.sum()), spilled_kwh=float(spill.sum()),
        iterations=iterations, n_windows=len(starts),
        wall_ms=1000.0 * (time.perf_counter() - t_begin),
        windows=windows_info, trace=trace)
