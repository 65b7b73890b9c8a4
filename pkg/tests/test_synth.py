"""Shape and texture checks for the synthetic community generator."""

import numpy as np
import pytest

from microrh.synth import SyntheticSpec, generate_synthetic


def per_day_sums(kwh, slots_per_day=96):
    return kwh.reshape(-1, slots_per_day).sum(axis=1)


def test_default_counts_and_shapes():
    inst = generate_synthetic()
    assert inst.grid.horizon_slots == 288
    assert inst.grid.n_days == 3
    assert len(inst.households) == 20
    assert len(inst.pv_systems) == 17
    assert len(inst.evs) == 15
    assert len(inst.batteries) == 1
    assert inst.batteries[0].initial_soc_kwh == 0.0
    assert inst.prices.da.shape == (72,)
    assert inst.prices.id_buy.shape == (288,)


def test_daily_energy_ranges():
    inst = generate_synthetic()
    for hh in inst.households:
        sums = per_day_sums(hh.kwh)
        assert np.all(sums > 8.0 - 1e-9) and np.all(sums < 10.0 + 1e-9)
    for pv in inst.pv_systems:
        sums = per_day_sums(pv.forecast_kwh)
        assert np.all(sums > 8.0 - 1e-9) and np.all(sums < 11.0 + 1e-9)
        # panels sleep at night
        night = pv.forecast_kwh.reshape(-1, 96)[:, :20]
        assert np.all(night == 0.0)


def test_price_ordering_holds_every_slot():
    # buying intraday always costs more than day-ahead, selling earns less
    inst = generate_synthetic()
    da_slot = np.repeat(inst.prices.da, 4)
    assert np.all(inst.prices.id_buy > da_slot)
    assert np.all(inst.prices.id_sell < da_slot)
    assert np.all(inst.prices.id_sell > 0)


def test_deterministic_in_data_seed():
    a = generate_synthetic(data_seed=5)
    b = generate_synthetic(data_seed=5)
    c = generate_synthetic(data_seed=6)
    assert np.array_equal(a.prices.id_buy, b.prices.id_buy)
    for ha, hb in zip(a.households, b.households):
        assert np.array_equal(ha.kwh, hb.kwh)
    for ea, eb in zip(a.evs, b.evs):
        assert ea.trips == eb.trips
    assert not np.array_equal(a.households[0].kwh, c.households[0].kwh)


def test_commutes_one_per_day_inside_their_hours():
    inst = generate_synthetic()
    for ev in inst.evs:
        assert len(ev.trips) == 3
        for d, trip in enumerate(ev.trips):
            day0 = d * 96
            assert day0 + 7 * 4 <= trip.depart_slot <= day0 + 9 * 4
            assert day0 + 18 * 4 <= trip.arrive_slot <= day0 + 20 * 4
            assert 3.6 - 1e-9 <= trip.demand_kwh <= 12.6 + 1e-9
            assert trip.depart_window == 2
            assert trip.arrive_window == 2


def test_small_and_empty_communities():
    spec = SyntheticSpec(days=1, households=0, pv_systems=0, evs=0)
    inst = generate_synthetic(spec, data_seed=1)
    assert inst.grid.horizon_slots == 96
    assert inst.households == ()
    assert inst.pv_systems == ()
    assert inst.evs == ()
    assert len(inst.batteries) == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(days=0)
    with pytest.raises(ValueError):
        SyntheticSpec(households=-1)
    with pytest.raises(ValueError):
        SyntheticSpec(id_sell_factor=1.1)
    with pytest.raises(ValueError):
        SyntheticSpec(id_buy_factor=0.9)
