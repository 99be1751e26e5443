"""Harvest profile, battery stepping, and sustainable-power search."""

import numpy as np
import pytest

from skyhaul import (BatteryState, DomainError, EnergyParams, HarvestProfile,
                     InfeasibleError, harvest, max_feasible_energy, step_battery)
from skyhaul.energy import simulate_trace, sustainable_tx_power

PROFILE = HarvestProfile(peak_harvest_j=50e3, sunrise_slot=6, sunset_slot=18,
                         slots_per_day=24)


def test_harvest_zero_at_night():
    for slot in (0, 3, 5, 19, 23):
        assert harvest(PROFILE, slot) == 0.0
    assert harvest(PROFILE, 24 + 2) == 0.0  # wraps around the day


def test_harvest_peak_at_solar_noon():
    assert harvest(PROFILE, 12) == pytest.approx(PROFILE.peak_harvest_j, rel=1e-12)


def test_harvest_symmetry():
    for k in range(0, 7):
        a = harvest(PROFILE, PROFILE.sunrise_slot + k)
        b = harvest(PROFILE, PROFILE.sunset_slot - k)
        assert a == pytest.approx(b, rel=1e-9, abs=1e-6)


def test_harvest_zero_outside_short_window():
    # Short daylight window: late-evening slots must stay at zero even where
    # the raw sine would go positive again.
    short = HarvestProfile(peak_harvest_j=1.0, sunrise_slot=6, sunset_slot=12)
    assert harvest(short, 21) == 0.0


def test_harvest_profile_invariants():
    with pytest.raises(DomainError):
        HarvestProfile(peak_harvest_j=1.0, sunrise_slot=10, sunset_slot=8)
    with pytest.raises(DomainError):
        HarvestProfile(peak_harvest_j=1.0, sunrise_slot=0, sunset_slot=30)


def test_step_battery_arithmetic():
    state = BatteryState(capacity=100.0, stored=50.0, slot_index=0)
    nxt = step_battery(state, harvested=10.0, consumed=20.0)
    assert nxt.stored == 40.0
    assert nxt.slot_index == 1


def test_step_battery_clips_at_capacity():
    state = BatteryState(capacity=100.0, stored=95.0)
    assert step_battery(state, 10.0, 0.0).stored == 100.0


def test_step_battery_infeasible_consumption():
    state = BatteryState(capacity=100.0, stored=50.0)
    with pytest.raises(InfeasibleError):
        step_battery(state, 0.0, 60.0)


def test_max_feasible_energy():
    assert max_feasible_energy(BatteryState(100.0, 50.0), 10.0) == 40.0
    assert max_feasible_energy(BatteryState(100.0, 5.0), 10.0) == 0.0
    assert max_feasible_energy(BatteryState(100.0, 10.0), 10.0) == 0.0
    with pytest.raises(DomainError):
        max_feasible_energy(BatteryState(100.0, 10.0), -1.0)


def test_battery_bounds_under_random_legal_sequences():
    rng = np.random.default_rng(5)
    for _ in range(50):
        cap = rng.uniform(50.0, 500.0)
        state = BatteryState(capacity=cap, stored=rng.uniform(0, cap))
        harvested_total = consumed_total = 0.0
        start = state.stored
        clipped = False
        for _ in range(48):
            h = rng.uniform(0, cap / 4)
            c = rng.uniform(0, state.stored)
            if state.stored - c + h > cap:
                clipped = True
            state = step_battery(state, h, c)
            harvested_total += h
            consumed_total += c
            assert 0.0 <= state.stored <= cap
        if not clipped:
            expected = start + harvested_total - consumed_total
            assert state.stored == pytest.approx(expected, abs=1e-9)


def test_simulate_trace_respects_constraint():
    params = EnergyParams(profile=PROFILE, operating_power_w=2.0, slot_duration_s=3600.0)
    battery = BatteryState(capacity=200e3, stored=100e3)
    trace = simulate_trace(battery, params, tx_power_w=1.0, slots=24)
    assert len(trace) == 24
    assert all(0.0 <= b.stored <= battery.capacity for b in trace)
    with pytest.raises(InfeasibleError):
        simulate_trace(battery, params, tx_power_w=50.0, slots=24)


def test_sustainable_power_is_maximal_feasible():
    params = EnergyParams(profile=PROFILE, operating_power_w=2.0, slot_duration_s=3600.0)
    battery = BatteryState(capacity=200e3, stored=100e3)
    p = sustainable_tx_power(battery, params, peak_power_w=10.0, slots=24, tol_w=1e-9)
    assert 0.0 < p < 10.0
    simulate_trace(battery, params, p, 24)  # feasible by construction
    with pytest.raises(InfeasibleError):
        simulate_trace(battery, params, p + 1e-3, 24)


def test_sustainable_power_full_peak_when_energy_rich():
    rich = EnergyParams(profile=HarvestProfile(peak_harvest_j=500e3), slot_duration_s=3600.0)
    battery = BatteryState(capacity=2e6, stored=2e6)
    assert sustainable_tx_power(battery, rich, peak_power_w=10.0, slots=24) == 10.0


def test_sustainable_power_zero_when_drained():
    params = EnergyParams(profile=HarvestProfile(peak_harvest_j=0.0),
                          operating_power_w=10.0, slot_duration_s=3600.0)
    battery = BatteryState(capacity=200e3, stored=1e3)
    assert sustainable_tx_power(battery, params, peak_power_w=10.0, slots=24) == 0.0
