"""Microgrid data model and window LP construction.

Quantities are energies in kWh per 15-minute slot.  Day-ahead decisions are
hourly; each hour contributes a quarter of its value to every slot it
covers.  The slot-level balance is emitted with sense >= so surplus supply
is allowed (it is tracked as spilled energy by the simulation, without
revenue).  Device state of charge is modeled with per-slot SoC variables
and sparse recursion rows rather than dense prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .solver import EQ, GE, LE, StandardFormLp

SLOT_TOL = 1e-9


def _freeze(arr):
    a = np.asarray(arr, dtype=np.float64)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# static data


@dataclass(frozen=True)
class TimeGrid:
    """Discrete slot grid: 15-minute slots, hourly day-ahead periods."""

    horizon_slots: int
    slots_per_hour: int = 4
    slots_per_day: int = 96

    def __post_init__(self):
        if self.slots_per_hour <= 0 or self.slots_per_day <= 0:
            raise ValueError("slot counts must be positive")
        if self.slots_per_day % self.slots_per_hour:
            raise ValueError("slots_per_day must be a multiple of slots_per_hour")
        if self.horizon_slots <= 0 or self.horizon_slots % self.slots_per_day:
            raise ValueError("horizon must be a positive whole number of days")

    @property
    def n_days(self) -> int:
        return self.horizon_slots // self.slots_per_day

    @property
    def n_hours(self) -> int:
        return self.horizon_slots // self.slots_per_hour

    @property
    def noon_offset(self) -> int:
        return self.slots_per_day // 2

    def hour_of(self, slot: int) -> int:
        return slot // self.slots_per_hour

    def day_of(self, slot: int) -> int:
        return slot // self.slots_per_day

    def day_slots(self, day: int) -> range:
        return range(day * self.slots_per_day, (day + 1) * self.slots_per_day)

    def day_hours(self, day: int) -> range:
        per_day = self.slots_per_day // self.slots_per_hour
        return range(day * per_day, (day + 1) * per_day)

    @property
    def day_ahead_submission_slots(self) -> tuple[int, ...]:
        """Slot 0 (bootstrap for day 0) plus each noon whose following day
        still lies inside the horizon."""
        slots = [0]
        for d in range(self.n_days - 1):
            slots.append(d * self.slots_per_day + self.noon_offset)
        return tuple(sorted(set(slots)))


@dataclass(frozen=True, eq=False)
class MarketPrices:
    """Day-ahead prices per hour, intraday buy/sell prices per slot (EUR/kWh)."""

    da: np.ndarray
    id_buy: np.ndarray
    id_sell: np.ndarray

    def __post_init__(self):
        for name in ("da", "id_buy", "id_sell"):
            arr = _freeze(getattr(self, name))
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} prices must be a finite vector")
            if np.any(arr < 0):
                raise ValueError(f"{name} prices must be nonnegative")
            object.__setattr__(self, name, arr)

    def da_of_slot(self, slot: int, slots_per_hour: int = 4) -> float:
        return float(self.da[slot // slots_per_hour])


@dataclass(frozen=True, eq=False)
class LoadProfile:
    household_id: str
    kwh: np.ndarray  # per slot

    def __post_init__(self):
        arr = _freeze(self.kwh)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("load profile must be finite and nonnegative")
        object.__setattr__(self, "kwh", arr)


@dataclass(frozen=True, eq=False)
class PvSystem:
    system_id: str
    forecast_kwh: np.ndarray  # per slot

    def __post_init__(self):
        arr = _freeze(self.forecast_kwh)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("PV forecast must be finite and nonnegative")
        object.__setattr__(self, "forecast_kwh", arr)


def _check_device_scalars(name, capacity, charge_limit, discharge_limit,
                          charge_eff, discharge_eff, initial_soc):
    if capacity <= 0:
        raise ValueError(f"{name}: capacity must be positive")
    if charge_limit <= 0 or discharge_limit <= 0:
        raise ValueError(f"{name}: slot energy limits must be positive")
    if not (0 < charge_eff <= 1 and 0 < discharge_eff <= 1):
        raise ValueError(f"{name}: efficiencies must lie in (0, 1]")
    if not (0 <= initial_soc <= capacity):
        raise ValueError(f"{name}: initial SoC outside [0, capacity]")


@dataclass(frozen=True)
class Battery:
    """Stationary battery.  Limits are kWh moved per slot at the meter;
    efficiencies apply on the way in and out of storage."""

    battery_id: str
    capacity_kwh: float
    charge_limit_kwh: float
    discharge_limit_kwh: float
    charge_eff: float = 1.0
    discharge_eff: float = 1.0
    initial_soc_kwh: float = 0.0

    def __post_init__(self):
        _check_device_scalars(self.battery_id, self.capacity_kwh,
                              self.charge_limit_kwh, self.discharge_limit_kwh,
                              self.charge_eff, self.discharge_eff,
                              self.initial_soc_kwh)


@dataclass(frozen=True)
class Trip:
    """One EV trip.  The vehicle is away during [depart_slot, arrive_slot)
    and its consumption lands on the SoC at the arrival slot.  Windows give
    the +- slot uncertainty of each boundary."""

    depart_slot: int
    arrive_slot: int
    demand_kwh: float
    depart_window: int = 0
    arrive_window: int = 0

    def __post_init__(self):
        if self.depart_slot >= self.arrive_slot:
            raise ValueError("trip must depart before it arrives")
        if self.depart_window < 0 or self.arrive_window < 0:
            raise ValueError("trip windows must be nonnegative")
        if self.demand_kwh < 0:
            raise ValueError("trip demand must be nonnegative")
        if self.depart_slot + self.depart_window >= self.arrive_slot - self.arrive_window:
            raise ValueError("trip windows overlap: boundaries could cross")

    @property
    def earliest_depart(self) -> int:
        return self.depart_slot - self.depart_window

    @property
    def latest_arrive(self) -> int:
        return self.arrive_slot + self.arrive_window


@dataclass(frozen=True)
class Ev:
    ev_id: str
    capacity_kwh: float
    charge_limit_kwh: float
    discharge_limit_kwh: float
    charge_eff: float = 1.0
    discharge_eff: float = 1.0
    initial_soc_kwh: float = 0.0
    trips: tuple[Trip, ...] = ()

    def __post_init__(self):
        _check_device_scalars(self.ev_id, self.capacity_kwh,
                              self.charge_limit_kwh, self.discharge_limit_kwh,
                              self.charge_eff, self.discharge_eff,
                              self.initial_soc_kwh)
        trips = tuple(self.trips)
        object.__setattr__(self, "trips", trips)
        for a, b in zip(trips, trips[1:]):
            if a.latest_arrive >= b.earliest_depart:
                raise ValueError(
                    f"{self.ev_id}: trips overlap under their windows")


@dataclass(frozen=True, eq=False)
class MicrogridInstance:
    grid: TimeGrid
    prices: MarketPrices
    households: tuple[LoadProfile, ...]
    pv_systems: tuple[PvSystem, ...]
    batteries: tuple[Battery, ...]
    evs: tuple[Ev, ...]
    grid_capacity_kwh_per_slot: float

    def __post_init__(self):
        object.__setattr__(self, "households", tuple(self.households))
        object.__setattr__(self, "pv_systems", tuple(self.pv_systems))
        object.__setattr__(self, "batteries", tuple(self.batteries))
        object.__setattr__(self, "evs", tuple(self.evs))
        T, H = self.grid.horizon_slots, self.grid.n_hours
        if self.prices.da.size != H:
            raise ValueError("day-ahead price series does not span the horizon")
        if self.prices.id_buy.size != T or self.prices.id_sell.size != T:
            raise ValueError("intraday price series does not span the horizon")
        for hh in self.households:
            if hh.kwh.size != T:
                raise ValueError(f"load profile {hh.household_id} wrong length")
        for pv in self.pv_systems:
            if pv.forecast_kwh.size != T:
                raise ValueError(f"PV forecast {pv.system_id} wrong length")
        if self.grid_capacity_kwh_per_slot <= 0:
            raise ValueError("grid capacity must be positive")
        for ev in self.evs:
            for trip in ev.trips:
                if trip.earliest_depart < 0 or trip.latest_arrive >= T:
                    raise ValueError(
                        f"{ev.ev_id}: trip window leaves the horizon")

    @property
    def load_total(self) -> np.ndarray:
        if not self.households:
            return np.zeros(self.grid.horizon_slots)
        return np.sum([hh.kwh for hh in self.households], axis=0)

    @property
    def pv_total(self) -> np.ndarray:
        if not self.pv_systems:
            return np.zeros(self.grid.horizon_slots)
        return np.sum([p.forecast_kwh for p in self.pv_systems], axis=0)

    def device_ids(self) -> list[str]:
        return ([b.battery_id for b in self.batteries]
                + [e.ev_id for e in self.evs])


# ---------------------------------------------------------------------------
# decisions


@dataclass(eq=False)
class DecisionSet:
    """Full-horizon decision arrays.  Hourly day-ahead, everything else per
    slot; device arrays are (device, slot)."""

    da_buy: np.ndarray
    da_sell: np.ndarray
    id_buy: np.ndarray
    id_sell: np.ndarray
    pv_used: np.ndarray
    bat_charge: np.ndarray
    bat_discharge: np.ndarray
    ev_charge: np.ndarray
    ev_discharge: np.ndarray

    def __post_init__(self):
        for name in ("da_buy", "da_sell", "id_buy", "id_sell", "pv_used",
                     "bat_charge", "bat_discharge", "ev_charge",
                     "ev_discharge"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if np.any(arr < -1e-7) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: decision values must be >= 0")
            setattr(self, name, np.maximum(arr, 0.0))

    @classmethod
    def zeros(cls, instance: MicrogridInstance) -> "DecisionSet":
        T, H = instance.grid.horizon_slots, instance.grid.n_hours
        return cls(
            da_buy=np.zeros(H), da_sell=np.zeros(H),
            id_buy=np.zeros(T), id_sell=np.zeros(T),
            pv_used=np.zeros((len(instance.pv_systems), T)),
            bat_charge=np.zeros((len(instance.batteries), T)),
            bat_discharge=np.zeros((len(instance.batteries), T)),
            ev_charge=np.zeros((len(instance.evs), T)),
            ev_discharge=np.zeros((len(instance.evs), T)),
        )

    def da_buy_slot(self, slot: int, slots_per_hour: int = 4) -> float:
        return float(self.da_buy[slot // slots_per_hour]) / slots_per_hour

    def da_sell_slot(self, slot: int, slots_per_hour: int = 4) -> float:
        return float(self.da_sell[slot // slots_per_hour]) / slots_per_hour


def evaluate_actual_cost(decisions: DecisionSet, prices: MarketPrices) -> float:
    """Settle a full-horizon decision set against a price series: day-ahead
    legs at hourly prices plus intraday legs at slot prices."""
    if decisions.da_buy.size != prices.da.size:
        raise ValueError("day-ahead decision and price lengths differ")
    if decisions.id_buy.size != prices.id_buy.size:
        raise ValueError("intraday decision and price lengths differ")
    cost = float(prices.da @ (decisions.da_buy - decisions.da_sell))
    cost += float(prices.id_buy @ decisions.id_buy)
    cost -= float(prices.id_sell @ decisions.id_sell)
    return cost


# ---------------------------------------------------------------------------
# window construction


@dataclass(frozen=True)
class WindowFix:
    """Values pinned before a window is built: committed day-ahead hours and
    the realized state of charge of every device at the window start."""

    da_buy: dict[int, float] = field(default_factory=dict)
    da_sell: dict[int, float] = field(default_factory=dict)
    start_soc: dict[str, float] = field(default_factory=dict)

    @classmethod
    def initial(cls, instance: MicrogridInstance) -> "WindowFix":
        soc = {b.battery_id: b.initial_soc_kwh for b in instance.batteries}
        soc.update({e.ev_id: e.initial_soc_kwh for e in instance.evs})
        return cls(start_soc=soc)


@dataclass(frozen=True)
class TripBooking:
    """How one trip enters a window: the away interval to block and the
    demand (optimistic/pessimistic when unobserved) at its booking slot."""

    away_start: int
    away_end: int  # exclusive
    demand_slot: int
    demand_hi: float
    demand_lo: float


@dataclass(frozen=True, eq=False)
class WindowAdjustments:
    """Parameter overrides applied while assembling a window LP.  The
    nominal (deterministic) case uses instance forecasts, nominal trip
    times, no balance protection and price multipliers of one."""

    pv_ub: np.ndarray | None = None         # (n_pv, horizon) upper bounds
    bookings: dict[tuple[int, int], TripBooking] | None = None
    load_alpha: float = 0.0
    load_gamma: np.ndarray | None = None    # per-slot budget over households
    da_buy_mult: float = 1.0
    da_sell_mult: float = 1.0
    id_buy_mult: float = 1.0
    id_sell_mult: float = 1.0

    @classmethod
    def nominal(cls, instance: MicrogridInstance) -> "WindowAdjustments":
        bookings = {}
        for e, ev in enumerate(instance.evs):
            for t, trip in enumerate(ev.trips):
                bookings[(e, t)] = TripBooking(
                    away_start=trip.depart_slot, away_end=trip.arrive_slot,
                    demand_slot=trip.arrive_slot, demand_hi=trip.demand_kwh,
                    demand_lo=trip.demand_kwh)
        return cls(bookings=bookings)


class LinearProgram:
    """Column/row builder with a name map, kept close to the standard-form
    solver input.  blocks maps a variable family to its column indices so
    solutions can be decoded without string parsing."""

    def __init__(self):
        self._obj: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._names: list[str] = []
        self._col_of: dict[str, int] = {}
        self._row_names: list[str] = []
        self._row_sense: list[int] = []
        self._row_rhs: list[float] = []
        self._row_cols: list[list[int]] = []
        self._row_vals: list[list[float]] = []
        self.blocks: dict = {}
        self.meta: dict = {}

    @property
    def n_vars(self) -> int:
        return len(self._obj)

    @property
    def n_rows(self) -> int:
        return len(self._row_rhs)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf,
                obj: float = 0.0) -> int:
        if name in self._col_of:
            raise ValueError(f"duplicate variable {name}")
        col = len(self._obj)
        self._obj.append(obj)
        self._lb.append(lb)
        self._ub.append(ub)
        self._names.append(name)
        self._col_of[name] = col
        return col

    def add_row(self, name: str, sense: int, rhs: float, terms) -> int:
        cols, vals = [], []
        for c, v in terms:
            if v != 0.0:
                cols.append(c)
                vals.append(v)
        self._row_names.append(name)
        self._row_sense.append(sense)
        self._row_rhs.append(rhs)
        self._row_cols.append(cols)
        self._row_vals.append(vals)
        return len(self._row_rhs) - 1

    def set_bounds(self, col: int, lb: float | None = None,
                   ub: float | None = None) -> None:
        if lb is not None:
            self._lb[col] = lb
        if ub is not None:
            self._ub[col] = ub

    def bounds(self, col: int) -> tuple[float, float]:
        return self._lb[col], self._ub[col]

    def column(self, name: str) -> int:
        return self._col_of[name]

    def column_name(self, col: int) -> str:
        return self._names[col]

    def to_standard(self) -> StandardFormLp:
        n, m = self.n_vars, self.n_rows
        counts = [len(c) for c in self._row_cols]
        total = sum(counts)
        rows = np.empty(total, dtype=np.int32)
        cols = np.empty(total, dtype=np.int32)
        vals = np.empty(total, dtype=np.float64)
        k = 0
        for i in range(m):
            c = counts[i]
            rows[k:k + c] = i
            cols[k:k + c] = self._row_cols[i]
            vals[k:k + c] = self._row_vals[i]
            k += c
        a = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        return StandardFormLp(
            c=np.array(self._obj), a=a,
            senses=np.array(self._row_sense, dtype=np.int8),
            b=np.array(self._row_rhs),
            lb=np.array(self._lb), ub=np.array(self._ub))

    def write_debug(self, stream) -> None:
        stream.write(f"min: {self._terms_text(range(self.n_vars), self._obj)}\n")
        sense_text = {LE: "<=", EQ: "==", GE: ">="}
        for i in range(self.n_rows):
            stream.write(
                f"{self._row_names[i]}: "
                f"{self._terms_text(self._row_cols[i], self._row_vals[i])} "
                f"{sense_text[self._row_sense[i]]} {self._row_rhs[i]:.12g}\n")
        for j in range(self.n_vars):
            stream.write(f"{self._names[j]}: {self._lb[j]:.12g} .. "
                         f"{self._ub[j]:.12g}\n")

    def _terms_text(self, cols, vals) -> str:
        parts = []
        for c, v in zip(cols, vals):
            if v == 0.0:
                continue
            parts.append(f"{'+' if v >= 0 else '-'} {abs(v):.12g} "
                         f"{self._names[c]}")
        return " ".join(parts) if parts else "0"

    def same_coefficients(self, other: "LinearProgram") -> bool:
        return (self._names == other._names
                and self._obj == other._obj
                and self._lb == other._lb
                and self._ub == other._ub
                and self._row_names == other._row_names
                and self._row_sense == other._row_sense
                and self._row_rhs == other._row_rhs
                and self._row_cols == other._row_cols
                and self._row_vals == other._row_vals)


def _window_hours(grid: TimeGrid, window: tuple[int, int]):
    w0, w1 = window
    return range(grid.hour_of(w0), grid.hour_of(w1 - 1) + 1)


def assemble_window(instance: MicrogridInstance, window: tuple[int, int],
                    fixed: WindowFix, adjust: WindowAdjustments) -> LinearProgram:
    """Build the window LP.  Shared by the deterministic and the robust
    construction; they differ only in the adjustment values."""
    grid = instance.grid
    w0, w1 = window
    T = grid.horizon_slots
    per_hour = grid.slots_per_hour
    cap = instance.grid_capacity_kwh_per_slot
    if not (0 <= w0 < w1 <= T):
        raise ValueError(f"window {window} outside the horizon [0, {T})")

    for label, fixed_da in (("buy", fixed.da_buy), ("sell", fixed.da_sell)):
        for h, v in fixed_da.items():
            if v < -SLOT_TOL:
                raise ValueError(f"fixed day-ahead {label} negative in hour {h}")
            if v / per_hour > cap + SLOT_TOL:
                raise ValueError(
                    f"fixed day-ahead {label} in hour {h} exceeds grid capacity")

    for dev in list(instance.batteries) + list(instance.evs):
        dev_id = dev.battery_id if isinstance(dev, Battery) else dev.ev_id
        if dev_id not in fixed.start_soc:
            raise ValueError(f"window fix is missing start SoC for {dev_id}")
        soc = fixed.start_soc[dev_id]
        if not (-SLOT_TOL <= soc <= dev.capacity_kwh + SLOT_TOL):
            raise ValueError(f"start SoC for {dev_id} outside [0, capacity]")

    bookings = adjust.bookings if adjust.bookings is not None else \
        WindowAdjustments.nominal(instance).bookings
    protection = (adjust.load_alpha > 0.0 and adjust.load_gamma is not None
                  and len(instance.households) > 0)

    lp = LinearProgram()
    lp.meta["window"] = (w0, w1)
    lp.meta["fixed"] = fixed
    W = w1 - w0
    slots = range(w0, w1)
    prices = instance.prices

    # hour bookkeeping: a free hour must lie entirely inside the window
    free_hours = []
    for h in _window_hours(grid, window):
        if h in fixed.da_buy or h in fixed.da_sell:
            if not (h in fixed.da_buy and h in fixed.da_sell):
                raise ValueError(f"hour {h} fixed on one market leg only")
            continue
        if h * per_hour < w0 or (h + 1) * per_hour > w1:
            raise ValueError(
                f"hour {h} is unfixed but only partially covered by the window")
        free_hours.append(h)

    da_buy_col: dict[int, int] = {}
    da_sell_col: dict[int, int] = {}
    for h in free_hours:
        da_buy_col[h] = lp.add_var(
            f"da_buy[{h}]", 0.0, per_hour * cap,
            adjust.da_buy_mult * prices.da[h])
        da_sell_col[h] = lp.add_var(
            f"da_sell[{h}]", 0.0, per_hour * cap,
            -adjust.da_sell_mult * prices.da[h])

    id_buy = np.empty(W, dtype=np.int64)
    id_sell = np.empty(W, dtype=np.int64)
    for t in slots:
        h = grid.hour_of(t)
        ub_buy = cap - fixed.da_buy.get(h, 0.0) / per_hour
        ub_sell = cap - fixed.da_sell.get(h, 0.0) / per_hour
        id_buy[t - w0] = lp.add_var(
            f"id_buy[{t}]", 0.0, max(ub_buy, 0.0),
            adjust.id_buy_mult * prices.id_buy[t])
        id_sell[t - w0] = lp.add_var(
            f"id_sell[{t}]", 0.0, max(ub_sell, 0.0),
            -adjust.id_sell_mult * prices.id_sell[t])

    n_pv = len(instance.pv_systems)
    pv = np.empty((n_pv, W), dtype=np.int64)
    for j, system in enumerate(instance.pv_systems):
        ubs = (adjust.pv_ub[j] if adjust.pv_ub is not None
               else system.forecast_kwh)
        for t in slots:
            pv[j, t - w0] = lp.add_var(
                f"pv[{j},{t}]", 0.0, max(float(ubs[t]), 0.0), 0.0)

    n_bat = len(instance.batteries)
    bc = np.empty((n_bat, W), dtype=np.int64)
    bd = np.empty((n_bat, W), dtype=np.int64)
    bsoc = np.empty((n_bat, W), dtype=np.int64)
    for k, bat in enumerate(instance.batteries):
        for t in slots:
            bc[k, t - w0] = lp.add_var(f"bat_c[{k},{t}]", 0.0,
                                       bat.charge_limit_kwh)
            bd[k, t - w0] = lp.add_var(f"bat_d[{k},{t}]", 0.0,
                                       bat.discharge_limit_kwh)
            bsoc[k, t - w0] = lp.add_var(f"bat_soc[{k},{t}]", 0.0,
                                         bat.capacity_kwh)
        if w1 == T:
            # stationary storage returns to its initial level at horizon end
            lp.set_bounds(int(bsoc[k, W - 1]), bat.initial_soc_kwh,
                          bat.initial_soc_kwh)

    n_ev = len(instance.evs)
    evc = np.empty((n_ev, W), dtype=np.int64)
    evd = np.empty((n_ev, W), dtype=np.int64)
    ev_soc_hi = np.full((n_ev, W), -1, dtype=np.int64)
    ev_soc_lo = np.full((n_ev, W), -1, dtype=np.int64)
    ev_dem_hi = np.zeros((n_ev, W))
    ev_dem_lo = np.zeros((n_ev, W))
    ev_away = np.zeros((n_ev, W), dtype=bool)
    ev_split = np.zeros(n_ev, dtype=bool)
    ev_dep_req: list[list[tuple[int, float]]] = [[] for _ in range(n_ev)]

    for e, ev in enumerate(instance.evs):
        for ti, trip in enumerate(ev.trips):
            bk = bookings.get((e, ti))
            if bk is None:
                continue
            a0, a1 = max(bk.away_start, w0), min(bk.away_end, w1)
            if a0 < a1:
                ev_away[e, a0 - w0:a1 - w0] = True
            if w0 <= bk.demand_slot < w1:
                ev_dem_hi[e, bk.demand_slot - w0] += bk.demand_hi
                ev_dem_lo[e, bk.demand_slot - w0] += bk.demand_lo
            elif bk.demand_slot >= w1 and w0 < bk.away_start <= w1:
                # trip leaves inside the window but returns after it: hold
                # enough charge at the last plugged-in slot for the trip
                ev_dep_req[e].append((bk.away_start - 1, bk.demand_hi))
        ev_split[e] = bool(np.any(ev_dem_hi[e] != ev_dem_lo[e]))
        for t in slots:
            i = t - w0
            lim_c = 0.0 if ev_away[e, i] else ev.charge_limit_kwh
            lim_d = 0.0 if ev_away[e, i] else ev.discharge_limit_kwh
            evc[e, i] = lp.add_var(f"ev_c[{e},{t}]", 0.0, lim_c)
            evd[e, i] = lp.add_var(f"ev_d[{e},{t}]", 0.0, lim_d)
            if ev_split[e]:
                ev_soc_hi[e, i] = lp.add_var(f"ev_soc_hi[{e},{t}]", 0.0, np.inf)
                ev_soc_lo[e, i] = lp.add_var(f"ev_soc_lo[{e},{t}]", -np.inf,
                                             ev.capacity_kwh)
            else:
                col = lp.add_var(f"ev_soc[{e},{t}]", 0.0, ev.capacity_kwh)
                ev_soc_hi[e, i] = col
                ev_soc_lo[e, i] = col
        for slot_req, level in ev_dep_req[e]:
            if slot_req >= w0:
                col = int(ev_soc_hi[e, slot_req - w0])
                cur_lb, cur_ub = lp.bounds(col)
                lp.set_bounds(col, max(cur_lb, level), None)

    # slots whose budget admits every household at once need no dual
    # block: the worst case is the plain sum, a constant on the rhs
    z_cols = np.full(W, -1, dtype=np.int64)
    w_cols = None
    dual_slot = np.zeros(W, dtype=bool)
    if protection:
        n_hh = len(instance.households)
        dual_slot = adjust.load_gamma[w0:w1] < n_hh
        w_cols = np.full((n_hh, W), -1, dtype=np.int64)
        for t in slots:
            if not dual_slot[t - w0]:
                continue
            z_cols[t - w0] = lp.add_var(f"prot_z[{t}]", 0.0, np.inf, 0.0)
            for i in range(n_hh):
                w_cols[i, t - w0] = lp.add_var(f"prot_w[{i},{t}]", 0.0,
                                               np.inf, 0.0)

    # balance rows, one per slot, sense >=
    load_nom = instance.load_total
    gamma = adjust.load_gamma
    for t in slots:
        i = t - w0
        h = grid.hour_of(t)
        terms = []
        for j in range(n_pv):
            terms.append((int(pv[j, i]), 1.0))
        for k in range(n_bat):
            terms.append((int(bd[k, i]), 1.0))
            terms.append((int(bc[k, i]), -1.0))
        for e in range(n_ev):
            terms.append((int(evd[e, i]), 1.0))
            terms.append((int(evc[e, i]), -1.0))
        terms.append((int(id_buy[i]), 1.0))
        terms.append((int(id_sell[i]), -1.0))
        rhs = float(load_nom[t])
        if h in da_buy_col:
            terms.append((da_buy_col[h], 1.0 / per_hour))
            terms.append((da_sell_col[h], -1.0 / per_hour))
        else:
            rhs -= (fixed.da_buy.get(h, 0.0) - fixed.da_sell.get(h, 0.0)) \
                / per_hour
        if protection and dual_slot[i]:
            terms.append((int(z_cols[i]), -float(gamma[t])))
            for iw in range(len(instance.households)):
                terms.append((int(w_cols[iw, i]), -1.0))
        elif protection:
            rhs += adjust.load_alpha * float(load_nom[t])
        lp.add_row(f"bal[{t}]", GE, rhs, terms)

    if protection:
        for t in slots:
            i = t - w0
            if not dual_slot[i]:
                continue
            for ih, hh in enumerate(instance.households):
                lp.add_row(
                    f"prot[{ih},{t}]", GE,
                    float(hh.kwh[t]) * adjust.load_alpha,
                    [(int(z_cols[i]), 1.0), (int(w_cols[ih, i]), 1.0)])

    # grid capacity rows only where a free day-ahead hour overlaps the slot
    for t in slots:
        h = grid.hour_of(t)
        if h in da_buy_col:
            i = t - w0
            lp.add_row(f"cap_buy[{t}]", LE, cap,
                       [(int(id_buy[i]), 1.0), (da_buy_col[h], 1.0 / per_hour)])
            lp.add_row(f"cap_sell[{t}]", LE, cap,
                       [(int(id_sell[i]), 1.0),
                        (da_sell_col[h], 1.0 / per_hour)])

    # storage recursions
    for k, bat in enumerate(instance.batteries):
        ce, de = bat.charge_eff, bat.discharge_eff
        start = fixed.start_soc[bat.battery_id]
        for t in slots:
            i = t - w0
            terms = [(int(bsoc[k, i]), 1.0), (int(bc[k, i]), -ce),
                     (int(bd[k, i]), 1.0 / de)]
            if i == 0:
                lp.add_row(f"bat_rec[{k},{t}]", EQ, start, terms)
            else:
                terms.append((int(bsoc[k, i - 1]), -1.0))
                lp.add_row(f"bat_rec[{k},{t}]", EQ, 0.0, terms)

    for e, ev in enumerate(instance.evs):
        ce, de = ev.charge_eff, ev.discharge_eff
        start = fixed.start_soc[ev.ev_id]
        chains = [("hi", ev_soc_hi, ev_dem_hi)]
        if ev_split[e]:
            chains.append(("lo", ev_soc_lo, ev_dem_lo))
        for tag, soc_cols, dem in chains:
            for t in slots:
                i = t - w0
                terms = [(int(soc_cols[e, i]), 1.0), (int(evc[e, i]), -ce),
                         (int(evd[e, i]), 1.0 / de)]
                rhs = -float(dem[e, i])
                if i == 0:
                    rhs += start
                else:
                    terms.append((int(soc_cols[e, i - 1]), -1.0))
                lp.add_row(f"ev_rec_{tag}[{e},{t}]", EQ, rhs, terms)

    lp.blocks = {
        "da_buy": da_buy_col, "da_sell": da_sell_col,
        "id_buy": id_buy, "id_sell": id_sell, "pv": pv,
        "bat_c": bc, "bat_d": bd, "bat_soc": bsoc,
        "ev_c": evc, "ev_d": evd,
        "ev_soc_hi": ev_soc_hi, "ev_soc_lo": ev_soc_lo,
    }
    return lp


def build_deterministic_window(instance: MicrogridInstance,
                               window: tuple[int, int],
                               fixed: WindowFix) -> LinearProgram:
    """Window LP with nominal forecasts, nominal trip times and no
    uncertainty protection."""
    return assemble_window(instance, window, fixed,
                           WindowAdjustments.nominal(instance))
