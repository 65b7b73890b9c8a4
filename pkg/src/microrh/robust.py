"""Uncertainty handling: budgeted robust counterparts and sampled outcomes.

Each uncertain quantity q is modeled multiplicatively, q = q_nominal *
(1 + alpha * u) with u in [-1, 1].  Slot-level load deviations share a
budget gamma per slot (sum of |u| over households); the robust balance
uses the standard linear dual of that budget's support function.  PV
availability uncertainty shrinks with forecast lead time through a ramp,
trip boundaries move within integer windows, and prices take their
pessimistic side on free market legs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    LinearProgram, MarketPrices, MicrogridInstance, TripBooking,
    WindowAdjustments, WindowFix, assemble_window,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Relative deviation levels per uncertainty source plus optional
    budgets.  A budget of None means the box case (budget = dimension).
    ev_time_window_slots of None keeps each trip's own boundary windows;
    an integer overrides them all."""

    name: str
    alpha_load: float = 0.0
    alpha_pv: float = 0.0
    alpha_ev: float = 0.0
    alpha_da: float = 0.0
    alpha_id: float = 0.0
    gamma_load: float | None = None
    gamma_pv: float | None = None
    ev_time_window_slots: int | None = None

    def __post_init__(self):
        for field_name in ("alpha_load", "alpha_pv", "alpha_ev", "alpha_da",
                           "alpha_id"):
            v = getattr(self, field_name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{field_name} must lie in [0, 1)")
        for field_name in ("gamma_load", "gamma_pv"):
            v = getattr(self, field_name)
            if v is not None and v < 0:
                raise ValueError(f"{field_name} must be nonnegative")
        w = self.ev_time_window_slots
        if w is not None and (w < 0 or int(w) != w):
            raise ValueError("ev_time_window_slots must be a whole slot count")


def zero_scenario() -> ScenarioConfig:
    return ScenarioConfig(name="zero", ev_time_window_slots=0)


SCENARIOS: dict[str, ScenarioConfig] = {
    "zero": zero_scenario(),
    "A": ScenarioConfig(name="A", alpha_load=0.10, alpha_pv=0.10,
                        alpha_ev=0.05, alpha_da=0.10, alpha_id=0.20),
    "B": ScenarioConfig(name="B", alpha_load=0.20, alpha_pv=0.25,
                        alpha_ev=0.10, alpha_da=0.15, alpha_id=0.35),
    "C": ScenarioConfig(name="C", alpha_load=0.35, alpha_pv=0.40,
                        alpha_ev=0.20, alpha_da=0.20, alpha_id=0.50),
}


@dataclass(frozen=True)
class DynamicPvRamp:
    """PV uncertainty attenuation by forecast lead: fully trusted at lead
    zero, fully uncertain once the lead reaches improved_window slots."""

    improved_window: int = 8

    def __post_init__(self):
        if self.improved_window < 1:
            raise ValueError("improved_window must be at least one slot")

    def r(self, lead: int) -> float:
        if lead <= 0:
            return 0.0
        if lead >= self.improved_window:
            return 1.0
        return lead / self.improved_window

    def beta(self, t: int, s: int) -> float:
        """Remaining accuracy gain of a decision taken at s for slot t."""
        return 1.0 - self.r(t - s)


def support_budget(coeffs, gamma: float) -> float:
    """max sum(coeffs * u) over 0 <= u <= 1, sum(u) <= gamma: the gamma
    largest coefficients fully, a fraction of the next one."""
    arr = np.asarray(coeffs, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("support coefficients must be nonnegative")
    if gamma < 0:
        raise ValueError("budget must be nonnegative")
    if gamma >= arr.size:
        # saturated budget: plain box sum, in the caller's order
        return float(arr.sum())
    c = np.sort(arr)[::-1]
    k = int(np.floor(gamma))
    return float(c[:k].sum() + (gamma - k) * c[k])


def effective_pv_alpha(scenario: ScenarioConfig, ramp: DynamicPvRamp,
                       lead: int) -> float:
    """Worst-case relative PV shortfall at a given forecast lead.  A single
    bound absorbs at most min(gamma, 1) of its budget; the box case
    (gamma None) leaves the full alpha."""
    gamma_cap = 1.0 if scenario.gamma_pv is None else min(scenario.gamma_pv, 1.0)
    return scenario.alpha_pv * ramp.r(lead) * gamma_cap


# ---------------------------------------------------------------------------
# sampled outcomes


@dataclass(frozen=True, eq=False)
class Realization:
    """Raw uncertainty draws, scenario independent: u values in (-1, 1) and
    trip boundary fractions in [0, 1)."""

    load_u: np.ndarray                       # (n_households, T)
    pv_u: np.ndarray                         # (n_pv, T)
    trip_demand_u: tuple[tuple[float, ...], ...]
    trip_depart_v: tuple[tuple[float, ...], ...]
    trip_arrive_v: tuple[tuple[float, ...], ...]
    da_u: np.ndarray                         # (n_hours,)
    id_buy_u: np.ndarray                     # (T,)
    id_sell_u: np.ndarray                    # (T,)


def sample_realization(instance: MicrogridInstance, seed: int) -> Realization:
    """Draw one outcome.  The draw order is fixed (households, PV, trips,
    then prices) so a seed pins the whole stream."""
    rng = np.random.default_rng(seed)
    T, H = instance.grid.horizon_slots, instance.grid.n_hours
    load_u = np.empty((len(instance.households), T))
    for i in range(len(instance.households)):
        load_u[i] = rng.uniform(-1.0, 1.0, T)
    pv_u = np.empty((len(instance.pv_systems), T))
    for j in range(len(instance.pv_systems)):
        pv_u[j] = rng.uniform(-1.0, 1.0, T)
    dem_u, dep_v, arr_v = [], [], []
    for ev in instance.evs:
        dem, dep, arr = [], [], []
        for _ in ev.trips:
            dem.append(float(rng.uniform(-1.0, 1.0)))
            dep.append(float(rng.uniform(0.0, 1.0)))
            arr.append(float(rng.uniform(0.0, 1.0)))
        dem_u.append(tuple(dem))
        dep_v.append(tuple(dep))
        arr_v.append(tuple(arr))
    return Realization(
        load_u=load_u, pv_u=pv_u,
        trip_demand_u=tuple(dem_u), trip_depart_v=tuple(dep_v),
        trip_arrive_v=tuple(arr_v),
        da_u=rng.uniform(-1.0, 1.0, H),
        id_buy_u=rng.uniform(-1.0, 1.0, T),
        id_sell_u=rng.uniform(-1.0, 1.0, T))


@dataclass(frozen=True, eq=False)
class RealizedData:
    """Concrete outcome after applying a scenario's deviation levels."""

    load: np.ndarray                         # (n_households, T)
    pv: np.ndarray                           # (n_pv, T)
    trips: tuple[tuple[tuple[int, int, float], ...], ...]
    da: np.ndarray
    id_buy: np.ndarray
    id_sell: np.ndarray

    def prices(self) -> MarketPrices:
        return MarketPrices(da=self.da, id_buy=self.id_buy,
                            id_sell=self.id_sell)

    @property
    def load_total(self) -> np.ndarray:
        if self.load.shape[0] == 0:
            return np.zeros(self.load.shape[1])
        return self.load.sum(axis=0)


def _trip_windows(scenario: ScenarioConfig, trip) -> tuple[int, int]:
    if scenario.ev_time_window_slots is None:
        return trip.depart_window, trip.arrive_window
    w = int(scenario.ev_time_window_slots)
    return w, w


def _offset(v: float, width: int) -> int:
    # uniform over the 2*width + 1 integers in [-width, width]
    return int(np.floor(v * (2 * width + 1))) - width


def realize(instance: MicrogridInstance, scenario: ScenarioConfig,
            draw: Realization) -> RealizedData:
    load = np.empty_like(draw.load_u)
    for i, hh in enumerate(instance.households):
        load[i] = hh.kwh * (1.0 + scenario.alpha_load * draw.load_u[i])
    pv = np.empty_like(draw.pv_u)
    for j, system in enumerate(instance.pv_systems):
        pv[j] = system.forecast_kwh * (1.0 + scenario.alpha_pv * draw.pv_u[j])
    trips = []
    for e, ev in enumerate(instance.evs):
        realized = []
        for ti, trip in enumerate(ev.trips):
            w_dep, w_arr = _trip_windows(scenario, trip)
            dep = trip.depart_slot + _offset(draw.trip_depart_v[e][ti], w_dep)
            arr = trip.arrive_slot + _offset(draw.trip_arrive_v[e][ti], w_arr)
            dem = trip.demand_kwh * (
                1.0 + scenario.alpha_ev * draw.trip_demand_u[e][ti])
            realized.append((int(dep), int(arr), float(dem)))
        trips.append(tuple(realized))
    prices = instance.prices
    return RealizedData(
        load=load, pv=pv, trips=tuple(trips),
        da=prices.da * (1.0 + scenario.alpha_da * draw.da_u),
        id_buy=prices.id_buy * (1.0 + scenario.alpha_id * draw.id_buy_u),
        id_sell=prices.id_sell * (1.0 + scenario.alpha_id * draw.id_sell_u))


@dataclass(frozen=True)
class InfoState:
    """What the planner can see when a window opens at slot `now`: the
    past, the current slot's PV output, and any trip boundary that has
    already happened."""

    now: int
    real: RealizedData

    def __post_init__(self):
        if self.now < 0:
            raise ValueError("now must be nonnegative")


# ---------------------------------------------------------------------------
# robust window construction


def _trip_booking(trip, real_trip, now: int, w_dep: int, w_arr: int,
                  alpha_ev: float) -> TripBooking:
    real_dep, real_arr, real_dem = real_trip
    dep_known = real_dep <= now
    arr_known = real_arr <= now
    away_start = real_dep if dep_known else trip.depart_slot - w_dep
    away_end = real_arr if arr_known else trip.arrive_slot + w_arr
    if arr_known:
        return TripBooking(away_start=away_start, away_end=away_end,
                           demand_slot=real_arr, demand_hi=real_dem,
                           demand_lo=real_dem)
    hi = trip.demand_kwh * (1.0 + alpha_ev)
    lo = trip.demand_kwh * (1.0 - alpha_ev)
    return TripBooking(away_start=away_start, away_end=away_end,
                       demand_slot=away_end, demand_hi=hi, demand_lo=lo)


def robust_adjustments(instance: MicrogridInstance, scenario: ScenarioConfig,
                       info: InfoState,
                       ramp: DynamicPvRamp) -> WindowAdjustments:
    T = instance.grid.horizon_slots
    now = info.now

    pv_ub = None
    if instance.pv_systems:
        pv_ub = np.empty((len(instance.pv_systems), T))
        shrink = np.array([1.0 - effective_pv_alpha(scenario, ramp, t - now)
                           for t in range(T)])
        for j, system in enumerate(instance.pv_systems):
            pv_ub[j] = system.forecast_kwh * shrink
            if 0 <= now < T:
                pv_ub[j, now] = info.real.pv[j, now]
        pv_ub = np.maximum(pv_ub, 0.0)

    bookings = {}
    for e, ev in enumerate(instance.evs):
        for ti, trip in enumerate(ev.trips):
            w_dep, w_arr = _trip_windows(scenario, trip)
            bookings[(e, ti)] = _trip_booking(
                trip, info.real.trips[e][ti], now, w_dep, w_arr,
                scenario.alpha_ev)

    load_gamma = None
    if scenario.alpha_load > 0.0 and instance.households:
        gamma = (scenario.gamma_load if scenario.gamma_load is not None
                 else float(len(instance.households)))
        load_gamma = np.full(T, min(gamma, float(len(instance.households))))

    return WindowAdjustments(
        pv_ub=pv_ub, bookings=bookings,
        load_alpha=scenario.alpha_load, load_gamma=load_gamma,
        da_buy_mult=1.0 + scenario.alpha_da,
        da_sell_mult=1.0 - scenario.alpha_da,
        id_buy_mult=1.0 + scenario.alpha_id,
        id_sell_mult=1.0 - scenario.alpha_id)


def robustify_window(instance: MicrogridInstance, window: tuple[int, int],
                     fixed: WindowFix, scenario: ScenarioConfig,
                     info: InfoState,
                     ramp: DynamicPvRamp | None = None) -> LinearProgram:
    """Budget-robust counterpart of the window LP.  With every deviation
    level at zero this reproduces the deterministic construction
    coefficient for coefficient."""
    if ramp is None:
        ramp = DynamicPvRamp()
    if info.now != window[0]:
        raise ValueError("window must open at the information state's slot")
    adjust = robust_adjustments(instance, scenario, info, ramp)
    lp = assemble_window(instance, window, fixed, adjust)
    lp.meta["scenario"] = scenario.name
    return lp
