"""Reading and writing instances, schedules, and result tables.

An instance on disk is a directory of small files:

    instance.json   time grid, grid connection, batteries, EV fleet
    prices.csv      slot,da,id_buy,id_sell (day-ahead repeated per slot)
    loads.csv       household_id,slot,kwh
    pv.csv          system_id,slot,forecast_kwh
    trips.csv       ev_id,depart_slot,arrive_slot,demand_kwh,
                    depart_window,arrive_window

Floats are written with repr so a save/load round trip reproduces the
exact same numbers.  Loader errors name the file and line that broke.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import (Battery, Ev, LoadProfile, MarketPrices,
                    MicrogridInstance, PvSystem, TimeGrid, Trip)

PRICE_COLUMNS = ("slot", "da", "id_buy", "id_sell")
LOAD_COLUMNS = ("household_id", "slot", "kwh")
PV_COLUMNS = ("system_id", "slot", "forecast_kwh")
TRIP_COLUMNS = ("ev_id", "depart_slot", "arrive_slot", "demand_kwh",
                "depart_window", "arrive_window")

# one simulation run per row; "mean" rows aggregate over seeds
RESULT_COLUMNS = ("mode", "scenario", "param", "seed", "cost_eur",
                  "pv_used_kwh", "pv_realized_kwh", "pv_usage_pct",
                  "bought_kwh", "sold_kwh", "net_bought_kwh",
                  "shortfall_slots", "spilled_kwh", "iterations", "wall_ms")
_MEAN_COLUMNS = RESULT_COLUMNS[4:]

SCHEDULE_COLUMNS = ("slot", "is_forced", "marginal_gain_eur")


class DataFormatError(ValueError):
    """Raised when an on-disk file does not match its schema."""


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path: Path, columns):
    """Yield (line_number, row_dict) pairs, enforcing the header."""
    if not path.exists():
        raise DataFormatError(f"{path.name}: file is missing")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path.name} line 1: empty file") from None
        if tuple(header) != tuple(columns):
            raise DataFormatError(
                f"{path.name} line 1: expected header "
                f"{','.join(columns)}, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns):
                raise DataFormatError(
                    f"{path.name} line {lineno}: expected "
                    f"{len(columns)} fields, got {len(row)}")
            yield lineno, dict(zip(columns, row))


def _as_int(name: str, lineno: int, text: str, field: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataFormatError(
            f"{name} line {lineno}: {field} must be an integer, "
            f"got {text!r}") from None


def _as_float(name: str, lineno: int, text: str, field: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(
            f"{name} line {lineno}: {field} must be a number, "
            f"got {text!r}") from None
    if not np.isfinite(value):
        raise DataFormatError(
            f"{name} line {lineno}: {field} must be finite")
    return value


def _series_rows(name: str, path: Path, columns, horizon: int):
    """Read an (id, slot, value) file into {id: vector} keeping id order."""
    id_field, slot_field, value_field = columns
    out: dict[str, np.ndarray] = {}
    seen: dict[str, np.ndarray] = {}
    for lineno, row in _read_csv(path, columns):
        key = row[id_field]
        slot = _as_int(name, lineno, row[slot_field], slot_field)
        value = _as_float(name, lineno, row[value_field], value_field)
        if not 0 <= slot < horizon:
            raise DataFormatError(
                f"{name} line {lineno}: slot {slot} outside [0, {horizon})")
        if key not in out:
            out[key] = np.zeros(horizon)
            seen[key] = np.zeros(horizon, dtype=bool)
        if seen[key][slot]:
            raise DataFormatError(
                f"{name} line {lineno}: duplicate slot {slot} for {key!r}")
        out[key][slot] = value
        seen[key][slot] = True
    for key, mask in seen.items():
        if not mask.all():
            missing = int(np.flatnonzero(~mask)[0])
            raise DataFormatError(
                f"{name}: {key!r} is missing slot {missing}")
    return out


def save_instance(instance: MicrogridInstance, dir_path) -> None:
    """Write the instance into dir_path, creating the directory."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    grid = instance.grid

    meta = {
        "grid": {
            "horizon_slots": grid.horizon_slots,
            "slots_per_hour": grid.slots_per_hour,
            "slots_per_day": grid.slots_per_day,
        },
        "grid_capacity_kwh_per_slot": instance.grid_capacity_kwh_per_slot,
        "batteries": [{
            "battery_id": b.battery_id,
            "capacity_kwh": b.capacity_kwh,
            "charge_limit_kwh": b.charge_limit_kwh,
            "discharge_limit_kwh": b.discharge_limit_kwh,
            "charge_eff": b.charge_eff,
            "discharge_eff": b.discharge_eff,
            "initial_soc_kwh": b.initial_soc_kwh,
        } for b in instance.batteries],
        "evs": [{
            "ev_id": e.ev_id,
            "capacity_kwh": e.capacity_kwh,
            "charge_limit_kwh": e.charge_limit_kwh,
            "discharge_limit_kwh": e.discharge_limit_kwh,
            "charge_eff": e.charge_eff,
            "discharge_eff": e.discharge_eff,
            "initial_soc_kwh": e.initial_soc_kwh,
        } for e in instance.evs],
    }
    with open(root / "instance.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")

    prices = instance.prices
    _write_csv(root / "prices.csv", PRICE_COLUMNS,
               ((t, prices.da_of_slot(t, grid.slots_per_hour),
                 prices.id_buy[t], prices.id_sell[t])
                for t in range(grid.horizon_slots)))
    _write_csv(root / "loads.csv", LOAD_COLUMNS,
               ((hh.household_id, t, hh.kwh[t])
                for hh in instance.households
                for t in range(grid.horizon_slots)))
    _write_csv(root / "pv.csv", PV_COLUMNS,
               ((pv.system_id, t, pv.forecast_kwh[t])
                for pv in instance.pv_systems
                for t in range(grid.horizon_slots)))
    _write_csv(root / "trips.csv", TRIP_COLUMNS,
               ((ev.ev_id, tr.depart_slot, tr.arrive_slot, tr.demand_kwh,
                 tr.depart_window, tr.arrive_window)
                for ev in instance.evs for tr in ev.trips))


def _load_grid(root: Path) -> tuple[TimeGrid, float, list, list]:
    path = root / "instance.json"
    if not path.exists():
        raise DataFormatError("instance.json: file is missing")
    try:
        with open(path) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(
            f"instance.json line {exc.lineno}: {exc.msg}") from None
    for key in ("grid", "grid_capacity_kwh_per_slot", "batteries", "evs"):
        if key not in meta:
            raise DataFormatError(f"instance.json: missing key {key!r}")
    try:
        grid = TimeGrid(**meta["grid"])
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"instance.json: bad grid ({exc})") from None
    return (grid, meta["grid_capacity_kwh_per_slot"],
            meta["batteries"], meta["evs"])


def load_instance(dir_path) -> MicrogridInstance:
    """Read an instance directory written by save_instance."""
    root = Path(dir_path)
    grid, capacity, battery_meta, ev_meta = _load_grid(root)
    T = grid.horizon_slots
    per_hour = grid.slots_per_hour

    da = np.zeros(T // per_hour)
    id_buy = np.zeros(T)
    id_sell = np.zeros(T)
    seen = np.zeros(T, dtype=bool)
    for lineno, row in _read_csv(root / "prices.csv", PRICE_COLUMNS):
        t = _as_int("prices.csv", lineno, row["slot"], "slot")
        if not 0 <= t < T:
            raise DataFormatError(
                f"prices.csv line {lineno}: slot {t} outside [0, {T})")
        if seen[t]:
            raise DataFormatError(
                f"prices.csv line {lineno}: duplicate slot {t}")
        seen[t] = True
        da_t = _as_float("prices.csv", lineno, row["da"], "da")
        # day-ahead trades clear per hour, so all slots of an hour agree
        if t % per_hour == 0:
            da[t // per_hour] = da_t
        elif da_t != da[t // per_hour]:
            raise DataFormatError(
                f"prices.csv line {lineno}: da changes inside hour "
                f"{t // per_hour}")
        id_buy[t] = _as_float("prices.csv", lineno, row["id_buy"], "id_buy")
        id_sell[t] = _as_float("prices.csv", lineno, row["id_sell"],
                               "id_sell")
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise DataFormatError(f"prices.csv: missing slot {missing}")

    loads = _series_rows("loads.csv", root / "loads.csv", LOAD_COLUMNS, T)
    pv = _series_rows("pv.csv", root / "pv.csv", PV_COLUMNS, T)

    trips: dict[str, list[Trip]] = {}
    for lineno, row in _read_csv(root / "trips.csv", TRIP_COLUMNS):
        try:
            trip = Trip(
                depart_slot=_as_int("trips.csv", lineno,
                                    row["depart_slot"], "depart_slot"),
                arrive_slot=_as_int("trips.csv", lineno,
                                    row["arrive_slot"], "arrive_slot"),
                demand_kwh=_as_float("trips.csv", lineno,
                                     row["demand_kwh"], "demand_kwh"),
                depart_window=_as_int("trips.csv", lineno,
                                      row["depart_window"], "depart_window"),
                arrive_window=_as_int("trips.csv", lineno,
                                      row["arrive_window"], "arrive_window"))
        except ValueError as exc:
            raise DataFormatError(
                f"trips.csv line {lineno}: {exc}") from None
        trips.setdefault(row["ev_id"], []).append(trip)

    def build_devices(meta_rows, cls, id_field, fname, with_trips):
        out = []
        for i, entry in enumerate(meta_rows):
            kwargs = dict(entry)
            if with_trips:
                kwargs["trips"] = tuple(trips.pop(kwargs.get(id_field, ""),
                                                  ()))
            try:
                out.append(cls(**kwargs))
            except (TypeError, ValueError) as exc:
                raise DataFormatError(
                    f"instance.json: {fname}[{i}]: {exc}") from None
        return tuple(out)

    batteries = build_devices(battery_meta, Battery, "battery_id",
                              "batteries", False)
    evs = build_devices(ev_meta, Ev, "ev_id", "evs", True)
    if trips:
        stray = sorted(trips)[0]
        raise DataFormatError(
            f"trips.csv: ev_id {stray!r} not declared in instance.json")

    try:
        return MicrogridInstance(
            grid=grid,
            prices=MarketPrices(da=da, id_buy=id_buy, id_sell=id_sell),
            households=tuple(LoadProfile(household_id=k, kwh=v)
                             for k, v in loads.items()),
            pv_systems=tuple(PvSystem(system_id=k, forecast_kwh=v)
                             for k, v in pv.items()),
            batteries=batteries,
            evs=evs,
            grid_capacity_kwh_per_slot=capacity)
    except ValueError as exc:
        raise DataFormatError(f"instance directory inconsistent: {exc}") \
            from None


def result_row(report, mode: str, scenario: str, param, seed) -> dict:
    """Flatten one simulation report into a results.csv row."""
    return {
        "mode": mode,
        "scenario": scenario,
        "param": param,
        "seed": seed,
        "cost_eur": report.cost_eur,
        "pv_used_kwh": report.pv_used_kwh,
        "pv_realized_kwh": report.pv_realized_kwh,
        "pv_usage_pct": report.pv_usage_pct,
        "bought_kwh": report.bought_kwh,
        "sold_kwh": report.sold_kwh,
        "net_bought_kwh": report.net_bought_kwh,
        "shortfall_slots": report.shortfall_slots,
        "spilled_kwh": report.spilled_kwh,
        "iterations": report.n_windows,
        "wall_ms": report.wall_ms,
    }


def aggregate_rows(rows: list[dict]) -> list[dict]:
    """Mean row per (mode, scenario, param) group, in first-seen order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["mode"], row["scenario"], row["param"]),
                          []).append(row)
    out = []
    for (mode, scenario, param), members in groups.items():
        mean = {"mode": mode, "scenario": scenario, "param": param,
                "seed": "mean"}
        for col in _MEAN_COLUMNS:
            mean[col] = float(np.mean([m[col] for m in members]))
        out.append(mean)
    return out


def write_results(path, rows: list[dict], *, timing: bool = True) -> None:
    """Write per-run rows followed by their aggregate mean rows.

    With timing off the wall_ms field is left blank so identical runs
    produce identical bytes.
    """
    table = list(rows) + aggregate_rows(rows)
    if not timing:
        table = [{**row, "wall_ms": ""} for row in table]
    _write_csv(Path(path), RESULT_COLUMNS,
               ([row[col] for col in RESULT_COLUMNS] for row in table))


def read_results(path) -> list[dict]:
    """Read results.csv back, converting numeric fields."""
    out = []
    for lineno, row in _read_csv(Path(path), RESULT_COLUMNS):
        parsed = dict(row)
        for col in _MEAN_COLUMNS:
            if row[col] == "":
                parsed[col] = None
            elif col in ("shortfall_slots", "iterations") \
                    and row["seed"] != "mean":
                parsed[col] = _as_int("results.csv", lineno, row[col], col)
            else:
                parsed[col] = _as_float("results.csv", lineno, row[col], col)
        out.append(parsed)
    return out


def write_schedule(path, schedule) -> None:
    """Write chosen start slots with their selection gains."""
    forced = set()
    for day_start, days in schedule.da_plan.items():
        if day_start in schedule.start_slots:
            forced.add(day_start)
    gains = schedule.gains or {}
    _write_csv(Path(path), SCHEDULE_COLUMNS,
               ((s, int(s in forced), gains.get(s, 0.0))
                for s in schedule.start_slots))


def write_run_meta(path, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")
