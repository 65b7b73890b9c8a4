"""Gain matrices and start-slot selection tests."""

import itertools

import numpy as np
import pytest

from microrh.model import LoadProfile, PvSystem, Ev, Trip, TimeGrid
from microrh.robust import DynamicPvRamp, ScenarioConfig
from microrh.scheduler import (
    GainMatrix, SelectionResult, build_gain_matrix, compute_v, compute_w,
    dynamic_schedule, select_starts,
)

from instances import bare_instance, flat_prices, tiny_grid


GAIN_SCENARIO = ScenarioConfig(name="gains", alpha_pv=0.25, alpha_ev=0.10,
                               alpha_id=0.35)


def gain_prices(grid, sell=0.10):
    base = flat_prices(grid)
    return type(base)(da=base.da, id_buy=base.id_buy,
                      id_sell=np.full(grid.horizon_slots, sell))


# ---------------------------------------------------------------------------
# per-pair values


def test_pv_gain_hand_value():
    grid = tiny_grid(16, per_day=16)
    prices = gain_prices(grid)
    ramp = DynamicPvRamp()
    # half the band left at a four-slot lead, sell discounted by 35 percent
    got = compute_v(4, 0, 1.0, GAIN_SCENARIO, ramp, prices)
    assert got == pytest.approx(0.008125, abs=1e-12)
    # a start after delivery is worthless, the band is gone at full lead
    assert compute_v(4, 6, 1.0, GAIN_SCENARIO, ramp, prices) == 0.0
    assert compute_v(8, 0, 1.0, GAIN_SCENARIO, ramp, prices) == 0.0
    # at lead zero the whole band is recovered
    full = compute_v(4, 4, 1.0, GAIN_SCENARIO, ramp, prices)
    assert full == pytest.approx(0.25 * 0.10 * 0.65, abs=1e-12)


def test_ev_gain_hand_value():
    grid = tiny_grid(16, per_day=16)
    prices = gain_prices(grid)
    trip = Trip(depart_slot=2, arrive_slot=6, demand_kwh=9.0,
                depart_window=0, arrive_window=0)
    got = compute_w(6, 8, (trip,), GAIN_SCENARIO, prices)
    assert got == pytest.approx(0.0585, abs=1e-12)
    assert compute_w(6, 6, (trip,), GAIN_SCENARIO, prices) == 0.0
    assert compute_w(6, 4, (trip,), GAIN_SCENARIO, prices) == 0.0
    assert compute_w(6, 8, (), GAIN_SCENARIO, prices) == 0.0


def test_ev_gain_uses_best_remaining_price():
    grid = tiny_grid(8, per_day=8)
    sell = np.array([0.2, 0.2, 0.2, 0.05, 0.03, 0.09, 0.01, 0.01])
    base = flat_prices(grid)
    prices = type(base)(da=base.da, id_buy=base.id_buy, id_sell=sell)
    trip = Trip(depart_slot=0, arrive_slot=2, demand_kwh=1.0,
                depart_window=0, arrive_window=0)
    scen = ScenarioConfig(name="s", alpha_ev=0.5)
    # from slot 4 onward the best sell quote is 0.09
    assert compute_w(2, 4, (trip,), scen, prices) \
        == pytest.approx(0.5 * 0.09, abs=1e-12)
    assert compute_w(2, 3, (trip,), scen, prices) \
        == pytest.approx(0.5 * 0.09, abs=1e-12)


# ---------------------------------------------------------------------------
# matrix construction


def test_gain_matrix_validation():
    ok_v = np.tril(np.ones((3, 3)))
    ok_w = np.triu(np.ones((3, 3)), 1)
    GainMatrix(v=ok_v, w=ok_w)
    with pytest.raises(ValueError):
        GainMatrix(v=np.ones((3, 2)), w=ok_w)
    with pytest.raises(ValueError):
        GainMatrix(v=-ok_v, w=ok_w)
    with pytest.raises(ValueError):
        GainMatrix(v=np.ones((3, 3)), w=ok_w)  # v above the diagonal
    with pytest.raises(ValueError):
        GainMatrix(v=ok_v, w=np.eye(3))  # w on the diagonal
    with pytest.raises(ValueError):
        GainMatrix(v=ok_v, w=ok_w, eta=-0.5)


def test_total_is_best_chosen_column_per_row():
    v = np.zeros((4, 4))
    v[2, 1] = 3.0
    v[2, 2] = 5.0
    v[3, 0] = 1.0
    w = np.zeros((4, 4))
    w[0, 3] = 2.0
    gm = GainMatrix(v=v, w=w, eta=0.5)
    assert gm.total([]) == 0.0
    assert gm.total([1]) == pytest.approx(3.0)
    assert gm.total([1, 2]) == pytest.approx(5.0)
    assert gm.total([0, 1, 2, 3]) == pytest.approx(5.0 + 1.0 + 0.5 * 2.0)


def scheduling_instance():
    grid = tiny_grid(16, per_day=16)
    pv_kwh = np.concatenate([np.zeros(6), np.full(6, 2.0), np.zeros(4)])
    ev = Ev("ev0", capacity_kwh=10.0, charge_limit_kwh=2.0,
            discharge_limit_kwh=2.0, charge_eff=0.9, discharge_eff=0.9,
            initial_soc_kwh=5.0,
            trips=(Trip(depart_slot=3, arrive_slot=9, demand_kwh=4.0,
                        depart_window=1, arrive_window=1),))
    return bare_instance(grid, gain_prices(grid),
                         households=(LoadProfile("h", np.full(16, 0.5)),),
                         pv=(PvSystem("p", pv_kwh),), evs=(ev,))


def test_built_matrix_matches_scalar_values():
    inst = scheduling_instance()
    ramp = DynamicPvRamp()
    gm = build_gain_matrix(inst, GAIN_SCENARIO, ramp=ramp)
    assert gm.n_slots == 16
    for t, s in [(7, 7), (8, 4), (10, 3), (9, 9), (5, 2)]:
        assert gm.v[t, s] == pytest.approx(
            compute_v(t, s, float(inst.pv_total[t]), GAIN_SCENARIO, ramp,
                      inst.prices), abs=1e-15)
    trip = inst.evs[0].trips[0]
    for s in (10, 12, 15):
        assert gm.w[9, s] == pytest.approx(
            compute_w(9, s, (trip,), GAIN_SCENARIO, inst.prices), abs=1e-15)
    assert np.all(gm.w[:9] == 0.0) and np.all(gm.w[10:] == 0.0)
    # leads at and beyond the ramp window carry nothing
    assert gm.v[11, 3] == 0.0
    assert gm.v[11, 4] > 0.0


def test_alpha_zero_matrix_is_empty():
    inst = scheduling_instance()
    gm = build_gain_matrix(inst, ScenarioConfig(name="zero"))
    assert not np.any(gm.v) and not np.any(gm.w)


# ---------------------------------------------------------------------------
# greedy selection


def toy_matrix():
    v = np.zeros((6, 6))
    v[1, 1] = 4.0
    v[2, 1] = 1.0
    v[2, 2] = 3.0
    v[4, 3] = 2.0
    w = np.zeros((6, 6))
    w[1, 4] = 2.5
    w[1, 5] = 2.5
    return GainMatrix(v=v, w=w)


def test_greedy_picks_by_marginal_gain():
    gm = toy_matrix()
    res = select_starts(gm, 3, forced=[0])
    # slot 1 first (4 + 1 = 5), then the w tie 4 over 5 (+2.5), then k hit
    assert res.chosen_slots == (0, 1, 4)
    assert res.gains[1] == pytest.approx(5.0)
    assert res.gains[4] == pytest.approx(2.5)
    assert res.gains[0] == pytest.approx(0.0)
    assert res.objective == pytest.approx(gm.total(res.chosen_slots))
    assert res.mode == "greedy"


def test_greedy_respects_budget_and_forced():
    gm = toy_matrix()
    res = select_starts(gm, 2, forced=[0, 3])
    assert res.chosen_slots == (0, 3)
    assert res.objective == pytest.approx(2.0)
    with pytest.raises(ValueError):
        select_starts(gm, 1, forced=[0, 3])
    with pytest.raises(ValueError):
        select_starts(gm, 3, forced=[9])
    with pytest.raises(ValueError):
        select_starts(gm, 3, forced=[0], mode="unknown")


def test_greedy_stops_without_positive_gain():
    gm = toy_matrix()
    res = select_starts(gm, 6, forced=[0])
    # 1, 2, 3 and one of the w twins cover everything; no fifth pick
    assert len(res.chosen_slots) == 5
    assert res.objective == pytest.approx(4.0 + 3.0 + 2.0 + 2.5)
    assert 4 in res.chosen_slots and 5 not in res.chosen_slots  # tie rule


def test_assignments_point_at_serving_slot():
    gm = toy_matrix()
    res = select_starts(gm, 4, forced=[0])
    assert res.assignment_v[1] == 1
    assert res.assignment_v[2] == 2
    assert res.assignment_w[1] == 4
    assert 0 not in res.assignment_v  # slot 0 serves nothing


# ---------------------------------------------------------------------------
# exact selection and quality guarantees


def brute_force_best(gm, k, forced):
    slots = range(gm.n_slots)
    best_val, best_set = -1.0, None
    free = [s for s in slots if s not in forced]
    for extra in range(0, k - len(forced) + 1):
        for combo in itertools.combinations(free, extra):
            chosen = sorted(set(forced) | set(combo))
            val = gm.total(chosen)
            if val > best_val + 1e-12:
                best_val, best_set = val, chosen
    return best_val, best_set


def random_gain(rng, n=8, density=0.4):
    v = np.tril(rng.uniform(0.0, 1.0, (n, n)))
    v[rng.uniform(size=(n, n)) > density] = 0.0
    v = np.tril(v)
    w = np.triu(rng.uniform(0.0, 1.0, (n, n)), 1)
    w[rng.uniform(size=(n, n)) > density] = 0.0
    w = np.triu(w, 1)
    return GainMatrix(v=v, w=w)


def test_exact_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(6):
        gm = random_gain(rng)
        want, _ = brute_force_best(gm, 3, [0])
        res = select_starts(gm, 3, [0], mode="exact", engine="simplex")
        assert res.mode == "exact"
        assert 0 in res.chosen_slots
        assert len(res.chosen_slots) <= 3
        assert res.objective == pytest.approx(want, abs=1e-8)


def test_greedy_meets_approximation_bound():
    rng = np.random.default_rng(21)
    bound = 1.0 - 1.0 / np.e
    for _ in range(20):
        gm = random_gain(rng, n=9)
        exact, _ = brute_force_best(gm, 4, [0])
        greedy = select_starts(gm, 4, [0]).objective
        assert greedy >= bound * exact - 1e-9
        assert greedy <= exact + 1e-9


def test_coverage_value_is_monotone_submodular():
    rng = np.random.default_rng(3)
    for _ in range(30):
        gm = random_gain(rng, n=7, density=0.6)
        pool = list(range(7))
        rng.shuffle(pool)
        small = sorted(pool[:2])
        big = sorted(pool[:4])
        s = pool[5]
        f_small = gm.total(small)
        f_big = gm.total(big)
        assert f_big >= f_small - 1e-12
        gain_small = gm.total(sorted(small + [s])) - f_small
        gain_big = gm.total(sorted(big + [s])) - f_big
        assert gain_small >= gain_big - 1e-12


# ---------------------------------------------------------------------------
# schedule construction


def test_dynamic_schedule_wraps_selection():
    inst = scheduling_instance()
    sched = dynamic_schedule(inst, GAIN_SCENARIO, k=4)
    assert sched.label == "dynamic-4"
    assert sched.start_slots[0] == 0
    assert len(sched.start_slots) <= 4
    assert sched.da_plan == {0: (0,)}
    assert sched.gains is not None and 0 in sched.gains
    # the budget floor keeps exactly the submission slots
    floor = dynamic_schedule(inst, GAIN_SCENARIO, k=1)
    assert floor.start_slots == (0,)
    assert floor.static


def test_dynamic_schedule_on_multi_day_grid():
    grid = TimeGrid(horizon_slots=288)
    hh = (LoadProfile("h", np.full(288, 0.3)),)
    pv_kwh = np.zeros(288)
    for d in range(3):
        pv_kwh[d * 96 + 32: d * 96 + 72] = 1.5
    inst = bare_instance(grid, flat_prices(grid), households=hh,
                         pv=(PvSystem("p", pv_kwh),))
    scen = ScenarioConfig(name="pvonly", alpha_pv=0.3, alpha_id=0.2)
    sched = dynamic_schedule(inst, scen, k=8)
    assert set(sched.da_plan) == {0, 48, 144}
    assert {0, 48, 144} <= set(sched.start_slots)
    assert len(sched.start_slots) == 8
    sched.check_against(grid)
    # extra starts land where PV is produced
    extras = [s for s in sched.start_slots if s not in (0, 48, 144)]
    assert all(any(d * 96 + 32 <= s < d * 96 + 72 for d in range(3))
               for s in extras)