"""Link budgets, Shannon rates, and backhaul chain rates."""

import math

import numpy as np
import pytest

from skyhaul import (ChainStructureError, ChannelParams, DomainError, FsoLinkParams,
                     LinkClass, Position3D, RfLinkParams, StationKind,
                     backhaul_chain_rate, fso_rate, rf_pathloss_db, rf_rate)
from skyhaul.assoc import BackhaulAssignment
from skyhaul.channel import backhaul_hop_rate, fso_snr, rf_link_budget

from conftest import hand_scenario, make_station, make_user
from skyhaul import Gateway

RF = RfLinkParams()
FSO = FsoLinkParams()

# 20*log10(4*pi*1000m*2GHz/c), c = 299792458 m/s, via 40-digit arithmetic
FSPL_1KM_2GHZ = 98.46838313516300
DOUBLING_DB = 6.020599913279624


def test_free_space_reference_value():
    tx, rx = Position3D(0, 0, 1.0), Position3D(0, 0, 0)
    pl = rf_pathloss_db(LinkClass.HAP_ACCESS, tx, rx,
                        RfLinkParams(excess_db_hap_user=0.0))
    assert pl == pytest.approx(FSPL_1KM_2GHZ, abs=1e-9)


def test_free_space_distance_doubling():
    a = rf_pathloss_db(LinkClass.HAP_ACCESS, Position3D(0, 0, 10), Position3D(0, 0, 0), RF)
    b = rf_pathloss_db(LinkClass.HAP_ACCESS, Position3D(0, 0, 20), Position3D(0, 0, 0), RF)
    assert b - a == pytest.approx(DOUBLING_DB, abs=1e-9)


def test_nlos_equals_free_space_at_reference_distance():
    d_ref_km = RF.reference_distance_m / 1000.0
    tx, rx = Position3D(0, 0, 0), Position3D(d_ref_km, 0, 0)
    nlos = rf_pathloss_db(LinkClass.TERRESTRIAL_ACCESS, tx, rx, RF)
    fs = 20 * math.log10(4 * math.pi * RF.reference_distance_m * RF.carrier_hz
                         / 299792458.0)
    assert nlos == pytest.approx(fs + RF.excess_db_terrestrial_user, abs=1e-12)


def test_pathloss_monotone_in_distance():
    for cls in LinkClass:
        prev = -math.inf
        for d in (0.5, 1.0, 3.0, 10.0, 40.0, 200.0):
            pl = rf_pathloss_db(cls, Position3D(0, 0, 0), Position3D(d, 0, 0), RF)
            assert pl > prev
            prev = pl


def test_zero_distance_rejected():
    p = Position3D(1.0, 2.0, 0.0)
    with pytest.raises(DomainError):
        rf_pathloss_db(LinkClass.RF_BACKHAUL, p, p, RF)


def test_rf_rate_examples():
    assert rf_rate(1e6, 0.0, 100.0, RF) == 0.0
    assert rf_rate(0.0, 1.0, 100.0, RF) == 0.0
    # pathloss tuned so received SNR is exactly 1: rate equals bandwidth
    bw, p = 1e6, 2.0
    pl = 10 * math.log10(p / (RF.noise_density_w_hz * bw))
    assert rf_rate(bw, p, pl, RF) == pytest.approx(bw, rel=1e-12)
    # SNR 15 over 1 MHz -> log2(16) = 4 bits/Hz
    pl = 10 * math.log10(p / (15.0 * RF.noise_density_w_hz * bw))
    assert rf_rate(bw, p, pl, RF) == pytest.approx(4e6, rel=1e-12)
    with pytest.raises(DomainError):
        rf_rate(-1.0, 1.0, 100.0, RF)
    with pytest.raises(DomainError):
        rf_rate(1e6, -1.0, 100.0, RF)


def test_rf_rate_monotone_in_power_and_bandwidth():
    pl = 120.0
    rates_p = [rf_rate(1e6, p, pl, RF) for p in (0.0, 0.5, 1.0, 4.0, 16.0)]
    assert all(b > a for a, b in zip(rates_p, rates_p[1:]))
    rates_b = [rf_rate(b, 2.0, pl, RF) for b in (1e5, 1e6, 1e7, 1e8)]
    assert all(b > a for a, b in zip(rates_b, rates_b[1:]))


def test_link_budget_snr_zero_iff_rate_zero():
    lb = rf_link_budget(LinkClass.HAP_ACCESS, Position3D(0, 0, 18), Position3D(5, 0, 0),
                        1e6, 0.0, RF)
    assert lb.rate == 0.0 and lb.received_snr == 0.0
    lb = rf_link_budget(LinkClass.HAP_ACCESS, Position3D(0, 0, 18), Position3D(5, 0, 0),
                        1e6, 3.0, RF)
    assert lb.rate > 0.0 and lb.received_snr > 0.0


def test_fso_pointing_factor():
    tx, rx = Position3D(0, 0, 18.0), Position3D(10, 0, 0)
    aligned = fso_snr(tx, rx, 0.0, FSO)
    jitter = fso_snr(tx, rx, FSO.pointing_jitter_rad, FSO)
    assert jitter / aligned == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_fso_rate_decreases_with_distance_and_misalignment():
    tx = Position3D(0, 0, 18.0)
    r20 = fso_rate(tx, Position3D(0, 20, 0), 0.0, FSO)
    r40 = fso_rate(tx, Position3D(0, 40, 0), 0.0, FSO)
    assert r20 > r40 > 0.0
    rates = [fso_rate(tx, Position3D(0, 20, 0), m, FSO)
             for m in (0.0, 1e-4, 5e-4, 2e-3, 1e-2)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_fso_domain_errors():
    tx = Position3D(0, 0, 18.0)
    with pytest.raises(DomainError):
        fso_rate(tx, tx, 0.0, FSO)
    with pytest.raises(DomainError):
        fso_rate(tx, Position3D(0, 20, 0), -0.1, FSO)
    with pytest.raises(DomainError):
        fso_rate(tx, Position3D(0, 20, 0), math.nan, FSO)


def _chain_world():
    """terrestrial(0) -> hap(1) -> gateway(3); satellite(2) idle."""
    cfg_kw = dict(seed=0, backhaul_bandwidth_hz=50e6)
    terr = make_station(0, StationKind.TERRESTRIAL, 80.0, 20.0, peak=100.0, bw=50e6)
    hap = make_station(1, StationKind.HAP, 90.0, 60.0, z=18.0, peak=10.0, bw=50e6)
    sat = make_station(2, StationKind.SATELLITE, 90.0, 90.0, z=35786.0, peak=300.0)
    gw = Gateway(id=3, pos=Position3D(90.0, 30.0, 0.0))
    sc = hand_scenario([make_user(0, 80, 21)], [terr, hap, sat], [gw], **cfg_kw)
    return sc, terr, hap, sat, gw


def test_chain_rate_is_min_over_hops(params):
    sc, terr, hap, sat, gw = _chain_world()
    bh = BackhaulAssignment(hap_parent={hap.id: gw.id},
                            station_uplink={terr.id: hap.id})
    b0 = sc.config.backhaul_bandwidth_hz
    hop_hap_gw = backhaul_hop_rate(LinkClass.RF_BACKHAUL, gw.pos, hap.pos, b0,
                                   params.backhaul_tx_power_w, params)
    hop_terr_hap = backhaul_hop_rate(LinkClass.RF_BACKHAUL, hap.pos, terr.pos, b0,
                                     params.backhaul_tx_power_w, params)
    chain_terr = backhaul_chain_rate(terr, bh, sc, params)
    assert chain_terr == pytest.approx(min(hop_terr_hap, hop_hap_gw), rel=1e-12)
    assert chain_terr <= hop_terr_hap and chain_terr <= hop_hap_gw
    chain_hap = backhaul_chain_rate(hap, bh, sc, params)
    assert chain_hap == pytest.approx(hop_hap_gw, rel=1e-12)


def test_single_hop_chain_is_identity(params):
    sc, terr, hap, sat, gw = _chain_world()
    bh = BackhaulAssignment(hap_parent={hap.id: sat.id},
                            station_uplink={terr.id: gw.id})
    direct = backhaul_hop_rate(LinkClass.RF_BACKHAUL, gw.pos, terr.pos,
                               sc.config.backhaul_bandwidth_hz,
                               params.backhaul_tx_power_w, params)
    assert backhaul_chain_rate(terr, bh, sc, params) == pytest.approx(direct, rel=1e-12)


def test_shared_parent_splits_bandwidth(params):
    """Two HAPs on one gateway each see the rate computed at B0/2."""
    cfg_kw = dict(seed=0, backhaul_bandwidth_hz=40e6)
    h1 = make_station(0, StationKind.HAP, 60.0, 60.0, z=18.0, peak=10.0, bw=50e6)
    h2 = make_station(1, StationKind.HAP, 120.0, 60.0, z=18.0, peak=10.0, bw=50e6)
    sat = make_station(2, StationKind.SATELLITE, 90.0, 90.0, z=35786.0, peak=300.0)
    gw = Gateway(id=3, pos=Position3D(90.0, 30.0, 0.0))
    sc = hand_scenario([], [h1, h2, sat], [gw], **cfg_kw)
    bh = BackhaulAssignment(hap_parent={h1.id: gw.id, h2.id: gw.id}, station_uplink={})
    for h in (h1, h2):
        # independent recomputation at half bandwidth, scalar formulas
        pl = rf_pathloss_db(LinkClass.RF_BACKHAUL, gw.pos, h.pos, params.rf)
        rf_half = rf_rate(20e6, params.backhaul_tx_power_w, pl, params.rf)
        fso_half = fso_rate(gw.pos, h.pos, 0.0, params.fso,
                            bandwidth_hz=params.fso.optical_bandwidth_hz / 2)
        expected = max(rf_half, fso_half)
        assert backhaul_chain_rate(h, bh, sc, params) == pytest.approx(expected, rel=1e-12)


def test_unassigned_chain_raises(params):
    sc, terr, hap, sat, gw = _chain_world()
    bh = BackhaulAssignment(hap_parent={}, station_uplink={terr.id: hap.id})
    with pytest.raises(ChainStructureError, match=f"hap {hap.id}"):
        backhaul_chain_rate(hap, bh, sc, params)
    with pytest.raises(ChainStructureError, match=f"station {terr.id}"):
        backhaul_chain_rate(terr, BackhaulAssignment(), sc, params)


def test_hybrid_hop_takes_best_technology(params):
    # Short hop: clear-air FSO beats RF; disable FSO and the rate drops to RF.
    a, b = Position3D(0, 0, 18.0), Position3D(20, 0, 0.0)
    hybrid = backhaul_hop_rate(LinkClass.RF_BACKHAUL, a, b, 100e6, 5.0, params)
    rf_only = backhaul_hop_rate(
        LinkClass.RF_BACKHAUL, a, b, 100e6, 5.0,
        ChannelParams(rf=params.rf, fso=params.fso, fso_enabled=False))
    pl = rf_pathloss_db(LinkClass.RF_BACKHAUL, a, b, params.rf)
    assert rf_only == pytest.approx(rf_rate(100e6, 5.0, pl, params.rf), rel=1e-12)
    assert hybrid >= rf_only
    assert hybrid == pytest.approx(
        max(rf_only, fso_rate(a, b, 0.0, params.fso)), rel=1e-12)
