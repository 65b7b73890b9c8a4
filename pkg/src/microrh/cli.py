"""Command line front end.

Subcommands:

    gen-data    write a synthetic community to an instance directory
    simulate    run one mode over its seeds, write results.csv
    compare     run static, classical, and dynamic at a matched size
    schedule    print the chosen replanning slots for a dynamic run

Every run directory gets a run_meta.json naming the config hash, so a
results file can always be traced back to the settings that made it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .dataio import (DataFormatError, load_instance, result_row,
                     save_instance, write_results, write_run_meta,
                     write_schedule)
from .horizon import classical_schedule, full_schedule, run
from .model import TimeGrid
from .robust import SCENARIOS, DynamicPvRamp
from .scheduler import dynamic_schedule
from .synth import SyntheticSpec, generate_synthetic


def _scenario(name: str):
    try:
        return SCENARIOS[name]
    except KeyError:
        options = "/".join(sorted(SCENARIOS))
        raise ConfigError(f"unknown scenario {name!r}, "
                          f"expected one of {options}") from None


def _instance(cfg: RunConfig):
    if cfg.data_dir is not None:
        inst = load_instance(cfg.data_dir)
        if inst.grid.horizon_slots != cfg.horizon_slots:
            raise ConfigError(
                f"data_dir holds {inst.grid.horizon_slots} slots but the "
                f"config asks for {cfg.horizon_slots}")
        return inst
    spec = SyntheticSpec(days=cfg.horizon_days)
    return generate_synthetic(spec, data_seed=cfg.data_seed)


def _schedule_for(cfg: RunConfig, mode: str, instance, scenario, ramp,
                  engine: str):
    if mode == "static":
        return full_schedule(instance.grid)
    if mode == "classical":
        return classical_schedule(instance.grid, cfg.resolved_step())
    return dynamic_schedule(instance, scenario, cfg.resolved_iterations(),
                            ramp=ramp, eta=cfg.eta, engine=engine)


def run_matrix(cfg: RunConfig, instance, *, modes=None, engine: str = "auto",
               trace_dir=None):
    """Simulate every (mode, seed) cell and flatten the reports to rows.

    Rows collected so far survive an exception in a later cell: the
    caller sees them via the list returned inside the raised error's
    partial attribute.
    """
    modes = list(modes) if modes is not None else [cfg.mode]
    rows: list[dict] = []
    try:
        scenario = _scenario(cfg.scenario)
        ramp = DynamicPvRamp(improved_window=cfg.improved_window_slots)
        for mode in modes:
            schedule = _schedule_for(cfg, mode, instance, scenario, ramp,
                                     engine)
            if mode == "static":
                param = "full"
            elif mode == "classical":
                param = cfg.resolved_step()
            else:
                param = cfg.resolved_iterations()
            for seed in cfg.seeds:
                report = run(instance, scenario, schedule, seed=seed,
                             engine=engine, ramp=ramp,
                             keep_trace=trace_dir is not None)
                rows.append(result_row(report, mode, cfg.scenario, param,
                                       seed))
                if trace_dir is not None:
                    path = Path(trace_dir) / \
                        f"trace_{mode}_{param}_{seed}.json"
                    flat = {k: v.tolist() for k, v in report.trace.items()}
                    with open(path, "w") as fh:
                        json.dump(flat, fh, indent=1, sort_keys=True)
    except BaseException as exc:
        # Ctrl-C included: the caller flushes what already finished
        exc.partial = rows
        raise
    return rows


def _meta(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config_hash": cfg.config_hash(),
        "config": cfg.canonical_text(),
        "package_version": __version__,
        "data_source": cfg.data_dir if cfg.data_dir is not None
        else f"synthetic(data_seed={cfg.data_seed})",
    }


def _load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_text(text)


def _cmd_gen_data(args) -> int:
    spec = SyntheticSpec(days=args.days, households=args.households,
                         pv_systems=args.pv_systems, evs=args.evs)
    instance = generate_synthetic(spec, data_seed=args.seed)
    save_instance(instance, args.out)
    print(f"wrote {args.out}: {args.households} households, "
          f"{args.pv_systems} pv systems, {args.evs} evs, "
          f"{instance.grid.horizon_slots} slots")
    return 0


def _run_and_write(cfg: RunConfig, modes, command: str, engine: str,
                   trace: bool) -> int:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = _instance(cfg)
    trace_dir = out_dir if trace else None
    try:
        rows = run_matrix(cfg, instance, modes=modes, engine=engine,
                          trace_dir=trace_dir)
    except BaseException as exc:
        # keep whatever finished so a long sweep is not lost
        rows = getattr(exc, "partial", [])
        if rows:
            write_results(out_dir / "results.csv", rows, timing=cfg.timing)
            print(f"aborted after {len(rows)} runs; partial results kept",
                  file=sys.stderr)
        raise
    write_results(out_dir / "results.csv", rows, timing=cfg.timing)
    write_run_meta(out_dir / "run_meta.json", _meta(cfg, command))
    print(f"wrote {out_dir / 'results.csv'} ({len(rows)} runs, "
          f"config {cfg.config_hash()})")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    return _run_and_write(cfg, None, "simulate", args.engine, args.trace)


def _cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    if cfg.mode == "static":
        raise ConfigError("compare needs a step_size or iterations, so set "
                          "mode to classical or dynamic in the config")
    # fail before any solves if the size does not map onto both modes
    if cfg.horizon_slots % cfg.resolved_iterations():
        raise ConfigError(
            f"iterations {cfg.resolved_iterations()} does not divide "
            f"{cfg.horizon_slots} slots, so no classical run matches")
    try:
        classical_schedule(TimeGrid(cfg.horizon_slots), cfg.resolved_step())
    except ValueError as exc:
        raise ConfigError(f"no classical run matches this size: {exc}") \
            from None
    return _run_and_write(cfg, ["static", "classical", "dynamic"],
                          "compare", args.engine, args.trace)


def _cmd_schedule(args) -> int:
    cfg = _load_config(args.config)
    if cfg.mode != "dynamic":
        raise ConfigError("schedule requires mode = dynamic")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    instance = _instance(cfg)
    scenario = _scenario(cfg.scenario)
    ramp = DynamicPvRamp(improved_window=cfg.improved_window_slots)
    schedule = dynamic_schedule(instance, scenario,
                                cfg.resolved_iterations(), ramp=ramp,
                                eta=cfg.eta, engine=args.engine)
    write_schedule(out_dir / "schedule.csv", schedule)
    write_run_meta(out_dir / "run_meta.json", _meta(cfg, "schedule"))
    gains = schedule.gains or {}
    for slot in schedule.start_slots:
        forced = "forced" if slot in schedule.da_plan else "chosen"
        print(f"slot {slot:4d}  {forced}  gain {gains.get(slot, 0.0):.4f}")
    print(f"wrote {out_dir / 'schedule.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microrh",
        description="Rolling horizon energy management for a microgrid "
                    "community under budgeted uncertainty.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data",
                         help="write a synthetic instance directory")
    gen.add_argument("--out", required=True, help="target directory")
    gen.add_argument("--days", type=int, default=3)
    gen.add_argument("--seed", type=int, default=2021,
                     help="data seed (independent of run seeds)")
    gen.add_argument("--households", type=int, default=20)
    gen.add_argument("--pv-systems", type=int, default=17)
    gen.add_argument("--evs", type=int, default=15)
    gen.set_defaults(func=_cmd_gen_data)

    for name, fn, text in (
            ("simulate", _cmd_simulate,
             "run the configured mode over its seeds"),
            ("compare", _cmd_compare,
             "run all three modes at the configured size"),
            ("schedule", _cmd_schedule,
             "select dynamic replanning slots and write schedule.csv")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True,
                         help="path to a key=value config file")
        cmd.add_argument("--engine", default="auto",
                         choices=("auto", "simplex", "highs"))
        if name != "schedule":
            cmd.add_argument("--trace", action="store_true",
                             help="write per-window trace json files")
        cmd.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
