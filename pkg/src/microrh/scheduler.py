"""Choosing when to re-plan: start-slot selection for the rolling horizon.

Re-planning costs a full window solve, so runs work from a budget of k
start slots.  Two effects make one start slot worth more than another:

* PV forecasts sharpen close to delivery.  A window opened at s prices a
  delivery slot t with an uncertainty band attenuated by the forecast
  ramp, so energy the wide band wrote off becomes sellable again.
* EV trips resolve on return.  A window opened after a vehicle is back
  replaces the worst-case trip demand with the measured one, and the
  freed safety margin can be sold at the best remaining price.

Both effects are priced per (delivery slot t, start slot s) pair into a
GainMatrix.  Picking k starts is then a coverage problem: every delivery
slot profits from its single best chosen start.  That total is monotone
submodular in the start set, so greedy selection carries the familiar
1 - 1/e guarantee; an exact branch-and-bound mode exists for validation
at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .horizon import StartSchedule, standard_da_plan
from .model import MarketPrices, MicrogridInstance, Trip
from .robust import DynamicPvRamp, ScenarioConfig, effective_pv_alpha
from .solver import BinaryProgram, solve_binary

_GAIN_TOL = 1e-12


# ---------------------------------------------------------------------------
# per-pair values


def compute_v(t: int, s: int, pv_total_forecast: float,
              scenario: ScenarioConfig, ramp: DynamicPvRamp,
              prices: MarketPrices) -> float:
    """Sell value recovered at delivery slot t when the plan is made at s.

    A plan made at s trusts the PV forecast for t up to the ramped band;
    whatever width the band loses relative to a far-ahead plan is energy
    that can be offered instead of written off.  It is priced at the
    intraday sell quote net of the price deviation.  Slots before the
    start (s > t) carry no value.
    """
    if s > t:
        return 0.0
    band = effective_pv_alpha(scenario, ramp, ramp.improved_window)
    return (pv_total_forecast * band * ramp.beta(t, s)
            * prices.id_sell[t] * (1.0 - scenario.alpha_id))


def compute_w(t: int, s: int, arrivals: tuple[Trip, ...],
              scenario: ScenarioConfig, prices: MarketPrices) -> float:
    """Sell value unlocked by observing the trips that end at slot t.

    Only a start strictly after the arrival sees the measured demand; the
    vehicle then holds up to the demand deviation more than the worst
    case assumed, available at the best net sell price from s onward.
    """
    if s <= t or not arrivals:
        return 0.0
    sell_net = prices.id_sell[s:] * (1.0 - scenario.alpha_id)
    best = float(np.max(sell_net)) if sell_net.size else 0.0
    total = sum(trip.demand_kwh for trip in arrivals)
    return total * scenario.alpha_ev * best


# ---------------------------------------------------------------------------
# the matrix and the coverage objective


@dataclass(frozen=True)
class GainMatrix:
    """Per (delivery slot, start slot) values for the two gain sources.

    v[t, s] prices the PV band improvement, w[t, s] the EV observation.
    Both are stored dense; at the sizes involved (a few hundred slots)
    that is a handful of megabytes at most.  eta weights the w part
    against the v part in the combined objective.
    """

    v: np.ndarray
    w: np.ndarray
    eta: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape != w.shape:
            raise ValueError("gain matrices must be square and equal shaped")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("gain entries must be finite")
        if np.any(v < 0) or np.any(w < 0):
            raise ValueError("gain entries must be nonnegative")
        # v pays only for starts at or before delivery, w only after
        if np.any(np.triu(v, 1) != 0):
            raise ValueError("v must vanish for start slots after delivery")
        if np.any(np.tril(w) != 0):
            raise ValueError("w must vanish for start slots at or before "
                             "delivery")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def n_slots(self) -> int:
        return self.v.shape[0]

    def total(self, chosen) -> float:
        """Coverage value of a start set: each delivery slot is served by
        its best chosen start, separately for the two sources."""
        cols = sorted(set(chosen))
        if not cols:
            return 0.0
        return float(self.v[:, cols].max(axis=1).sum()
                     + self.eta * self.w[:, cols].max(axis=1).sum())


def build_gain_matrix(instance: MicrogridInstance, scenario: ScenarioConfig,
                      *, ramp: DynamicPvRamp | None = None,
                      eta: float = 1.0) -> GainMatrix:
    """Price every (delivery, start) pair for an instance and scenario."""
    ramp = ramp or DynamicPvRamp()
    T = instance.grid.horizon_slots
    prices = instance.prices
    sell_net = prices.id_sell * (1.0 - scenario.alpha_id)

    v = np.zeros((T, T))
    band = effective_pv_alpha(scenario, ramp, ramp.improved_window)
    if band > 0.0:
        pv_hat = instance.pv_total
        for lead in range(ramp.improved_window):
            beta = 1.0 - ramp.r(lead)
            tt = np.arange(lead, T)
            v[tt, tt - lead] = pv_hat[tt] * band * beta * sell_net[tt]

    w = np.zeros((T, T))
    if scenario.alpha_ev > 0.0:
        demand_at = np.zeros(T)
        for ev in instance.evs:
            for trip in ev.trips:
                demand_at[trip.arrive_slot] += trip.demand_kwh
        # best net sell price from each start onward
        suffix_best = np.maximum.accumulate(sell_net[::-1])[::-1]
        for t in np.nonzero(demand_at)[0]:
            w[t, t + 1:] = demand_at[t] * scenario.alpha_ev \
                * suffix_best[t + 1:]
    return GainMatrix(v=v, w=w, eta=eta)


# ---------------------------------------------------------------------------
# selection


@dataclass(frozen=True)
class SelectionResult:
    """A chosen start set with its per-slot bookkeeping.

    assignment_v/assignment_w map each delivery slot to the start that
    serves it (only slots with positive value appear).  For greedy runs,
    gains records the marginal objective gain at the moment each slot
    entered the set, forced slots included.
    """

    chosen_slots: tuple[int, ...]
    objective: float
    assignment_v: dict[int, int] = field(default_factory=dict)
    assignment_w: dict[int, int] = field(default_factory=dict)
    gains: dict[int, float] | None = None
    mode: str = "greedy"


def _assignments(mat: np.ndarray, chosen: list[int]) -> dict[int, int]:
    # chosen is sorted, so argmax resolves ties toward the smallest slot
    sub = mat[:, chosen]
    best = sub.max(axis=1)
    pick = sub.argmax(axis=1)
    return {int(t): int(chosen[pick[t]])
            for t in np.nonzero(best > _GAIN_TOL)[0]}


def select_starts(gains: GainMatrix, k: int, forced,
                  *, mode: str = "greedy",
                  engine: str = "auto") -> SelectionResult:
    """Pick at most k start slots (forced ones included) maximizing the
    coverage value of the gain matrix.

    greedy: repeatedly add the slot with the largest marginal gain, ties
    toward the smallest slot, stopping at k slots or when no candidate
    adds value.  exact: solve the selection as a small binary program.
    """
    T = gains.n_slots
    forced = sorted(set(int(s) for s in forced))
    if any(s < 0 or s >= T for s in forced):
        raise ValueError("forced slot outside the horizon")
    if k < len(forced):
        raise ValueError(f"budget k={k} cannot cover {len(forced)} "
                         "forced slots")
    if mode == "greedy":
        return _select_greedy(gains, k, forced)
    if mode == "exact":
        return _select_exact(gains, k, forced, engine)
    raise ValueError(f"unknown selection mode {mode!r}")


def _select_greedy(gains: GainMatrix, k: int, forced: list[int]
                   ) -> SelectionResult:
    T = gains.n_slots
    best_v = np.zeros(T)
    best_w = np.zeros(T)
    chosen: list[int] = []
    step_gain: dict[int, float] = {}

    def add(s: int) -> float:
        dv = np.maximum(gains.v[:, s] - best_v, 0.0)
        dw = np.maximum(gains.w[:, s] - best_w, 0.0)
        delta = float(dv.sum() + gains.eta * dw.sum())
        np.maximum(best_v, gains.v[:, s], out=best_v)
        np.maximum(best_w, gains.w[:, s], out=best_w)
        chosen.append(s)
        step_gain[s] = delta
        return delta

    for s in forced:
        add(s)
    in_set = np.zeros(T, dtype=bool)
    in_set[forced] = True
    while len(chosen) < k:
        dv = np.maximum(gains.v - best_v[:, None], 0.0).sum(axis=0)
        dw = np.maximum(gains.w - best_w[:, None], 0.0).sum(axis=0)
        delta = dv + gains.eta * dw
        delta[in_set] = -1.0
        s = int(np.argmax(delta))
        if delta[s] <= _GAIN_TOL:
            break
        add(s)
        in_set[s] = True

    chosen_sorted = sorted(chosen)
    return SelectionResult(
        chosen_slots=tuple(chosen_sorted),
        objective=gains.total(chosen_sorted),
        assignment_v=_assignments(gains.v, chosen_sorted),
        assignment_w=_assignments(gains.w, chosen_sorted),
        gains=step_gain, mode="greedy")


def _select_exact(gains: GainMatrix, k: int, forced: list[int],
                  engine: str) -> SelectionResult:
    """Binary program: x_s selects a start; continuous y/z assign each
    delivery slot to one selected start per source.  Only pairs with
    positive value get variables."""
    T = gains.n_slots
    v_pairs = [(t, s) for t, s in zip(*np.nonzero(gains.v > _GAIN_TOL))]
    w_pairs = [(t, s) for t, s in zip(*np.nonzero(gains.w > _GAIN_TOL))]
    ny, nz = len(v_pairs), len(w_pairs)
    n = T + ny + nz

    c = np.zeros(n)
    for j, (t, s) in enumerate(v_pairs):
        c[T + j] = gains.v[t, s]
    for j, (t, s) in enumerate(w_pairs):
        c[T + ny + j] = gains.eta * gains.w[t, s]

    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def link(col: int, s: int):
        row = np.zeros(n)
        row[col] = 1.0
        row[s] = -1.0
        rows.append(row)
        rhs.append(0.0)

    per_t_v: dict[int, list[int]] = {}
    for j, (t, s) in enumerate(v_pairs):
        link(T + j, s)
        per_t_v.setdefault(t, []).append(T + j)
    per_t_w: dict[int, list[int]] = {}
    for j, (t, s) in enumerate(w_pairs):
        link(T + ny + j, s)
        per_t_w.setdefault(t, []).append(T + ny + j)
    for cols in list(per_t_v.values()) + list(per_t_w.values()):
        row = np.zeros(n)
        row[cols] = 1.0
        rows.append(row)
        rhs.append(1.0)
    budget = np.zeros(n)
    budget[:T] = 1.0
    rows.append(budget)
    rhs.append(float(k))
    for s in forced:
        row = np.zeros(n)
        row[s] = -1.0
        rows.append(row)
        rhs.append(-1.0)

    binary = np.zeros(n, dtype=bool)
    binary[:T] = True
    bp = BinaryProgram(c=c, a=np.array(rows), b=np.array(rhs), binary=binary)
    sol = solve_binary(bp, engine=engine)
    if sol.status != "optimal":
        raise RuntimeError(f"exact selection ended with status {sol.status}")
    picked = sorted(int(s) for s in np.nonzero(sol.x[:T] > 0.5)[0])
    # drop selected slots that serve nothing (budget slack can leave them in)
    useful = set(forced)
    useful.update(_assignments(gains.v, picked).values())
    useful.update(_assignments(gains.w, picked).values())
    picked = sorted(set(picked) & useful | set(forced))
    return SelectionResult(
        chosen_slots=tuple(picked),
        objective=gains.total(picked),
        assignment_v=_assignments(gains.v, picked),
        assignment_w=_assignments(gains.w, picked),
        gains=None, mode="exact")


# ---------------------------------------------------------------------------
# schedule construction


def dynamic_schedule(instance: MicrogridInstance, scenario: ScenarioConfig,
                     k: int, *, ramp: DynamicPvRamp | None = None,
                     eta: float = 1.0, mode: str = "greedy",
                     engine: str = "auto") -> StartSchedule:
    """Build a start schedule from the gain matrix under a budget of k
    starts.  The day-ahead submission slots are always part of the set
    and count against the budget."""
    plan = standard_da_plan(instance.grid)
    forced = sorted(plan)
    gains = build_gain_matrix(instance, scenario, ramp=ramp, eta=eta)
    result = select_starts(gains, k, forced, mode=mode, engine=engine)
    schedule = StartSchedule(
        start_slots=result.chosen_slots, da_plan=plan,
        label=f"dynamic-{k}", gains=result.gains)
    schedule.check_against(instance.grid)
    return schedule