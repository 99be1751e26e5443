"""Scenario generation, validation, and utility metrics."""

import dataclasses
import math

import numpy as np
import pytest

from skyhaul import (Box, DomainError, Position3D, ScenarioConfig,
                     ScenarioValidationError, StationKind, UtilityMetric,
                     generate_scenario, utility, validate_scenario)
from skyhaul.model import split_user_counts

DEFAULT = ScenarioConfig()


def test_default_config_generates_valid_scenario():
    sc = generate_scenario(DEFAULT)
    assert validate_scenario(sc) == []
    assert len(sc.users) == 400
    assert len(sc.gateways) == 2
    assert sc.config.subarea1_box == Box(75.0, 105.0, 0.0, 30.0)


def test_zero_users_is_fine():
    sc = generate_scenario(dataclasses.replace(DEFAULT, user_count=0))
    assert sc.users == ()
    assert validate_scenario(sc) == []


def test_rounding_rule_ten_users():
    cfg = dataclasses.replace(DEFAULT, user_count=10)
    assert split_user_counts(cfg) == (4, 3, 3)
    sc = generate_scenario(cfg)
    in1 = sum(1 for u in sc.users if cfg.subarea1_box.contains(u.pos.x, u.pos.y))
    in2 = sum(1 for u in sc.users if cfg.subarea2_box.contains(u.pos.x, u.pos.y))
    assert (in1, in2, 10 - in1 - in2) == (4, 3, 3)


def test_rounding_rule_half_up():
    cfg = dataclasses.replace(DEFAULT, user_count=5, user_split=(0.5, 0.3, 0.2))
    # 0.5*5 = 2.5 rounds up to 3; 0.3*5 = 1.5 rounds up to 2; remainder 0
    assert split_user_counts(cfg) == (3, 2, 0)


def test_generation_is_deterministic():
    cfg = dataclasses.replace(DEFAULT, user_count=50, seed=123)
    assert generate_scenario(cfg) == generate_scenario(cfg)


def test_different_seeds_differ():
    a = generate_scenario(dataclasses.replace(DEFAULT, user_count=50, seed=1))
    b = generate_scenario(dataclasses.replace(DEFAULT, user_count=50, seed=2))
    assert a.users != b.users


def test_entity_placement_constraints():
    sc = generate_scenario(dataclasses.replace(DEFAULT, user_count=200, seed=7))
    cfg = sc.config
    for u in sc.users:
        assert 0.0 <= u.pos.x <= cfg.area_side_km
        assert 0.0 <= u.pos.y <= cfg.area_side_km
        assert u.pos.z == 0.0
    for s in sc.stations:
        if s.kind is StationKind.TERRESTRIAL:
            assert cfg.subarea1_box.contains(s.pos.x, s.pos.y)
            assert s.pos.z == 0.0
        elif s.kind is StationKind.RELAY:
            assert cfg.subarea2_box.contains(s.pos.x, s.pos.y)
            assert s.battery is not None
        elif s.kind is StationKind.HAP:
            assert 17.0 <= s.pos.z <= 20.0
        else:
            assert s.pos.z == cfg.satellite_altitude_km
    # gateways sit on the subarea-3 boundary (the facing box edges)
    for g in sc.gateways:
        assert g.pos.y in (cfg.subarea1_box.y_max, cfg.subarea2_box.y_min)


def test_subarea3_users_outside_both_boxes():
    sc = generate_scenario(dataclasses.replace(DEFAULT, user_count=100, seed=3))
    cfg = sc.config
    n1, n2, n3 = split_user_counts(cfg)
    outside = [u for u in sc.users
               if not cfg.subarea1_box.contains(u.pos.x, u.pos.y)
               and not cfg.subarea2_box.contains(u.pos.x, u.pos.y)]
    assert len(outside) == n3


def test_invalid_config_rejected():
    bad = dataclasses.replace(DEFAULT, hap_altitude_km=25.0)
    with pytest.raises(ScenarioValidationError, match="hap_altitude"):
        generate_scenario(bad)
    bad = dataclasses.replace(DEFAULT, user_split=(0.5, 0.5, 0.5))
    with pytest.raises(ScenarioValidationError, match="user_split"):
        generate_scenario(bad)


def test_validate_reports_hap_altitude():
    sc = generate_scenario(dataclasses.replace(DEFAULT, user_count=5))
    hap = next(s for s in sc.stations if s.kind is StationKind.HAP)
    tampered = dataclasses.replace(
        sc, stations=tuple(
            dataclasses.replace(s, pos=Position3D(s.pos.x, s.pos.y, 25.0))
            if s.id == hap.id else s for s in sc.stations))
    problems = validate_scenario(tampered)
    assert any("hap_altitude" in p and f"station {hap.id}" in p for p in problems)


def test_validate_reports_duplicate_user_id():
    sc = generate_scenario(dataclasses.replace(DEFAULT, user_count=5))
    dup = dataclasses.replace(sc.users[1], id=sc.users[0].id)
    tampered = dataclasses.replace(sc, users=(sc.users[0], dup) + sc.users[2:])
    problems = validate_scenario(tampered)
    assert any("duplicate id" in p and f"user {sc.users[0].id}" in p for p in problems)


def test_position_invariants():
    with pytest.raises(DomainError):
        Position3D(0.0, 0.0, -1.0)
    with pytest.raises(DomainError):
        Position3D(math.nan, 0.0, 0.0)


def test_utility_examples():
    assert utility([1, 2, 3], UtilityMetric.SUM_RATE) == 6.0
    assert utility([1, 2, 3], UtilityMetric.MIN_RATE) == 1.0
    assert utility([1, 4], UtilityMetric.PROPORTIONAL_FAIR) == pytest.approx(2.0)


def test_utility_empty_and_errors():
    for m in UtilityMetric:
        assert utility([], m) == 0.0
    with pytest.raises(DomainError):
        utility([-1.0], UtilityMetric.SUM_RATE)
    with pytest.raises(DomainError):
        utility([math.inf], UtilityMetric.MIN_RATE)
    assert utility([0.0, 5.0], UtilityMetric.PROPORTIONAL_FAIR) == 0.0


def test_utility_mean_inequality_chain_and_permutation():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rates = rng.uniform(0.1, 100.0, rng.integers(1, 9)).tolist()
        mn = utility(rates, UtilityMetric.MIN_RATE)
        pf = utility(rates, UtilityMetric.PROPORTIONAL_FAIR)
        sm = utility(rates, UtilityMetric.SUM_RATE)
        assert mn <= pf * (1 + 1e-12)
        assert pf <= sm / len(rates) * (1 + 1e-12)
        perm = rng.permutation(rates).tolist()
        for m in UtilityMetric:
            assert utility(perm, m) == pytest.approx(utility(rates, m), rel=1e-12)
