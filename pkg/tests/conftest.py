import numpy as np
import pytest

from skyhaul import (BatteryState, Box, ChannelParams, EnergyParams, Gateway,
                     Position3D, Scenario, ScenarioConfig, Station, StationKind, User)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def params():
    return ChannelParams()


@pytest.fixture
def energy_params():
    return EnergyParams()


def make_user(uid, x, y, qos=0.0):
    return User(id=uid, pos=Position3D(x, y, 0.0), qos_min_rate=qos)


def make_station(sid, kind, x, y, z=0.0, peak=10.0, bw=20e6, battery=None):
    return Station(id=sid, kind=kind, pos=Position3D(x, y, z), peak_power=peak,
                   access_bandwidth=bw, battery=battery)


def hand_scenario(users, stations, gateways, **config_kw):
    """Scenario from explicit entities; config counts follow the entities."""
    kinds = [s.kind for s in stations]
    cfg = ScenarioConfig(
        user_count=len(users),
        terrestrial_count=kinds.count(StationKind.TERRESTRIAL),
        relay_count=kinds.count(StationKind.RELAY),
        hap_count=kinds.count(StationKind.HAP),
        gateway_count=len(gateways),
        **config_kw,
    )
    return Scenario(users=tuple(users), stations=tuple(stations),
                    gateways=tuple(gateways), config=cfg)


def simple_backhaul_world(chain_test=False):
    """One user, one HAP, one gateway, one satellite; ids 0..2 + gateway 3."""
    cfg = ScenarioConfig(user_count=1, terrestrial_count=0, relay_count=0,
                         hap_count=1, gateway_count=1, seed=0)
    user = make_user(0, 90.0, 90.0, qos=0.0)
    hap = make_station(0, StationKind.HAP, 90.0, 80.0, z=18.0, peak=10.0, bw=50e6)
    sat = make_station(1, StationKind.SATELLITE, 90.0, 90.0,
                       z=cfg.satellite_altitude_km, peak=300.0, bw=0.0)
    gw = Gateway(id=2, pos=Position3D(90.0, 40.0, 0.0))
    return Scenario(users=(user,), stations=(hap, sat), gateways=(gw,), config=cfg)


def fresh_battery(capacity=200e3, stored=100e3, slot=0):
    return BatteryState(capacity=capacity, stored=stored, slot_index=slot)


def seeded_rng(seed=0):
    return np.random.default_rng(seed)
