"""End-to-end checks of the command line, driven through main()."""

import json

import pytest

from microrh.cli import main, run_matrix
from microrh.config import RunConfig
from microrh.dataio import load_instance, read_results
from microrh.synth import SyntheticSpec, generate_synthetic


def write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_gen_data_writes_loadable_instance(tmp_path, capsys):
    rc = main(["gen-data", "--out", str(tmp_path / "data"), "--days", "1",
               "--households", "2", "--pv-systems", "1", "--evs", "1",
               "--seed", "9"])
    assert rc == 0
    assert "2 households" in capsys.readouterr().out
    inst = load_instance(tmp_path / "data")
    assert inst.grid.horizon_slots == 96
    assert len(inst.households) == 2
    assert len(inst.evs) == 1


def test_simulate_writes_results_and_meta(tmp_path, capsys):
    cfg = write_cfg(tmp_path, f"""
mode = classical
scenario = zero
step_size = 48
seeds = 0, 1
horizon_days = 1
out_dir = {tmp_path / 'out'}
timing = off
""")
    assert main(["simulate", "--config", cfg]) == 0
    rows = read_results(tmp_path / "out" / "results.csv")
    assert [(r["mode"], r["param"], r["seed"]) for r in rows] == \
        [("classical", "48", "0"), ("classical", "48", "1"),
         ("classical", "48", "mean")]
    # certain world: both seeds realize the same outcome
    assert rows[0]["cost_eur"] == rows[1]["cost_eur"] == rows[2]["cost_eur"]

    meta = json.loads((tmp_path / "out" / "run_meta.json").read_text())
    parsed = RunConfig.from_text((tmp_path / "run.cfg").read_text())
    assert meta["config_hash"] == parsed.config_hash()
    assert meta["command"] == "simulate"
    assert "synthetic" in meta["data_source"]
    assert parsed.config_hash() in capsys.readouterr().out


def test_simulate_reruns_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, f"""
mode = static
scenario = B
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
timing = off
""")
    assert main(["simulate", "--config", cfg]) == 0
    first = (tmp_path / "out" / "results.csv").read_bytes()
    meta_first = (tmp_path / "out" / "run_meta.json").read_bytes()
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "out" / "results.csv").read_bytes() == first
    assert (tmp_path / "out" / "run_meta.json").read_bytes() == meta_first


def test_simulate_reads_instance_directory(tmp_path):
    main(["gen-data", "--out", str(tmp_path / "data"), "--days", "1",
          "--households", "2", "--pv-systems", "1", "--evs", "0"])
    cfg = write_cfg(tmp_path, f"""
mode = static
scenario = zero
seeds = 0
horizon_days = 1
data_dir = {tmp_path / 'data'}
out_dir = {tmp_path / 'out'}
""")
    assert main(["simulate", "--config", cfg]) == 0
    rows = read_results(tmp_path / "out" / "results.csv")
    assert rows[0]["iterations"] == 1

    meta = json.loads((tmp_path / "out" / "run_meta.json").read_text())
    assert meta["data_source"] == str(tmp_path / "data")


def test_simulate_rejects_wrong_horizon(tmp_path, capsys):
    main(["gen-data", "--out", str(tmp_path / "data"), "--days", "1",
          "--households", "1", "--pv-systems", "0", "--evs", "0"])
    cfg = write_cfg(tmp_path, f"""
mode = static
horizon_days = 2
data_dir = {tmp_path / 'data'}
out_dir = {tmp_path / 'out'}
""")
    assert main(["simulate", "--config", cfg]) == 2
    assert "96 slots" in capsys.readouterr().err


def test_compare_covers_all_three_modes(tmp_path):
    cfg = write_cfg(tmp_path, f"""
mode = dynamic
scenario = B
iterations = 4
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
timing = off
""")
    assert main(["compare", "--config", cfg]) == 0
    rows = read_results(tmp_path / "out" / "results.csv")
    assert [(r["mode"], r["param"]) for r in rows if r["seed"] != "mean"] \
        == [("static", "full"), ("classical", "24"), ("dynamic", "4")]
    by_mode = {r["mode"]: r for r in rows if r["seed"] != "mean"}
    # replanning can only help on the same draws
    assert by_mode["dynamic"]["cost_eur"] <= \
        by_mode["classical"]["cost_eur"] + 1e-9


def test_compare_rejects_unmatchable_budget(tmp_path, capsys):
    cfg = write_cfg(tmp_path, f"""
mode = dynamic
iterations = 5
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
""")
    assert main(["compare", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "no classical run matches" in err or "does not divide" in err


def test_schedule_writes_choices(tmp_path, capsys):
    cfg = write_cfg(tmp_path, f"""
mode = dynamic
scenario = B
iterations = 4
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
""")
    assert main(["schedule", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "forced" in out and "chosen" in out
    lines = (tmp_path / "out" / "schedule.csv").read_text().splitlines()
    assert lines[0] == "slot,is_forced,marginal_gain_eur"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 4
    assert rows[0][:2] == ["0", "1"]
    assert all(float(r[2]) >= 0.0 for r in rows)

    bad = write_cfg(tmp_path, "mode = static\n")
    assert main(["schedule", "--config", bad]) == 2


def test_trace_flag_writes_window_traces(tmp_path):
    cfg = write_cfg(tmp_path, f"""
mode = static
scenario = zero
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
""")
    assert main(["simulate", "--config", cfg, "--trace"]) == 0
    trace = json.loads(
        (tmp_path / "out" / "trace_static_full_0.json").read_text())
    assert len(trace["load_kwh"]) == 96
    assert len(trace["supply_kwh"]) == 96


def test_timing_on_reports_wall_ms(tmp_path):
    cfg = write_cfg(tmp_path, f"""
mode = static
scenario = zero
seeds = 0
horizon_days = 1
out_dir = {tmp_path / 'out'}
timing = on
""")
    assert main(["simulate", "--config", cfg]) == 0
    rows = read_results(tmp_path / "out" / "results.csv")
    assert rows[0]["wall_ms"] > 0.0


def test_bad_config_path_and_text(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 2
    assert "cannot read config" in capsys.readouterr().err
    cfg = write_cfg(tmp_path, "mode = classical\n")
    assert main(["simulate", "--config", cfg]) == 2
    assert "exactly one" in capsys.readouterr().err
    cfg = write_cfg(tmp_path, "mode = static\nscenario = D\n")
    assert main(["simulate", "--config", cfg]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_run_matrix_flushes_partial_rows_on_failure(tmp_path):
    inst = generate_synthetic(SyntheticSpec(days=1, households=2,
                                            pv_systems=1, evs=0),
                              data_seed=3)
    # failing before any run leaves an empty partial list behind
    bad_scenario = RunConfig(mode="static", scenario="nope",
                             seeds=(0,), horizon_days=1)
    with pytest.raises(Exception) as info:
        run_matrix(bad_scenario, inst)
    assert getattr(info.value, "partial", None) == []

    # step 7 cannot schedule, but the static rows before it survive
    bad_step = RunConfig(mode="classical", scenario="zero", step_size=7,
                         seeds=(0, 1), horizon_days=1)
    with pytest.raises(ValueError) as info:
        run_matrix(bad_step, inst, modes=["static", "classical"])
    rows = info.value.partial
    assert [(r["mode"], r["seed"]) for r in rows] == \
        [("static", 0), ("static", 1)]

    cfg_ok = RunConfig(mode="static", scenario="zero", seeds=(0, 1),
                       horizon_days=1)
    assert len(run_matrix(cfg_ok, inst)) == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "microrh" in capsys.readouterr().out
