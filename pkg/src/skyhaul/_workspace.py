"""Vectorized per-scenario arrays shared by the association and solver code.

Builds the dense user-by-station gain/rate matrices once per scenario and
recomputes only the HAP columns when placement search moves a HAP. Access
bandwidth is handed out in fixed per-user slices: a station with access
bandwidth B admits at most floor(B/W) users, each on a W-wide channel.
Everything here is derived, immutable-by-convention state; the public
domain objects stay the source of truth.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as kernels
from . import channel as ch
from . import energy as en
from .model import Position3D, Scenario, StationKind, UtilityMetric

METRIC_CODE = {
    UtilityMetric.SUM_RATE: kernels.SUM_RATE,
    UtilityMetric.MIN_RATE: kernels.MIN_RATE,
    UtilityMetric.PROPORTIONAL_FAIR: kernels.PROP_FAIR,
}

_MIN_ACCESS_DISTANCE_M = 1.0  # avoid a singular gain when a user sits on a station


class SolverWorkspace:
    """Dense arrays for one (scenario, channel params, energy params) triple."""

    def __init__(self, scenario: Scenario, params: ch.ChannelParams,
                 energy_params: en.EnergyParams):
        self.scenario = scenario
        self.params = params
        self.energy_params = energy_params
        cfg = scenario.config

        self.users = sorted(scenario.users, key=lambda u: u.id)
        self.user_ids = np.array([u.id for u in self.users], dtype=np.int64)
        self.user_xy = np.array([[u.pos.x, u.pos.y] for u in self.users],
                                dtype=float).reshape(len(self.users), 2)
        self.qos = np.array([u.qos_min_rate for u in self.users], dtype=float)

        self.stations = sorted(
            (s for s in scenario.stations if s.kind is not StationKind.SATELLITE),
            key=lambda s: s.id)
        self.station_ids = np.array([s.id for s in self.stations], dtype=np.int64)
        self.station_index = {s.id: i for i, s in enumerate(self.stations)}
        self.kinds = [s.kind for s in self.stations]
        self.bw = np.array([s.access_bandwidth for s in self.stations], dtype=float)
        self.slice_hz = cfg.user_bandwidth_hz
        self.caps = np.floor(self.bw / self.slice_hz).astype(np.int64)

        # Relay transmit budgets are capped at the battery-sustainable level.
        self.sustainable = {}
        peaks = []
        for s in self.stations:
            p = s.peak_power
            if s.kind is StationKind.RELAY:
                p = en.sustainable_tx_power(s.battery, energy_params, p, cfg.time_slots)
                self.sustainable[s.id] = p
            peaks.append(p)
        self.peak = np.array(peaks, dtype=float)

        self.hap_indices = [i for i, s in enumerate(self.stations)
                            if s.kind is StationKind.HAP]
        self.hap_ids = [self.stations[i].id for i in self.hap_indices]
        self.hap_altitudes = np.array(
            [self.stations[i].pos.z for i in self.hap_indices], dtype=float)
        self.initial_hap_xy = np.array(
            [[self.stations[i].pos.x, self.stations[i].pos.y] for i in self.hap_indices],
            dtype=float).reshape(len(self.hap_indices), 2)

        self.noise = params.rf.noise_density_w_hz
        self.snr_floor = 10.0 ** (params.access_snr_floor_db / 10.0)

        n_u, n_s = len(self.users), len(self.stations)
        self._gain_fixed = np.zeros((n_u, n_s))
        for i, s in enumerate(self.stations):
            if s.kind is StationKind.HAP:
                continue
            self._gain_fixed[:, i] = self._ground_gain(s)

    def _ground_gain(self, station) -> np.ndarray:
        rf = self.params.rf
        d_m = np.hypot(self.user_xy[:, 0] - station.pos.x,
                       self.user_xy[:, 1] - station.pos.y) * 1000.0
        d_m = np.maximum(d_m, _MIN_ACCESS_DISTANCE_M)
        cls = ch.access_link_class(station.kind)
        d0 = rf.reference_distance_m
        pl = (ch.free_space_pathloss_db(d0, rf.carrier_hz)
              + 10.0 * rf.pathloss_exponent_nlos * np.log10(d_m / d0)
              + rf.excess_for(cls))
        return 10.0 ** (-pl / 10.0)

    def _hap_gain(self, xy: np.ndarray, altitude_km: float) -> np.ndarray:
        rf = self.params.rf
        d_km = np.sqrt((self.user_xy[:, 0] - xy[0]) ** 2
                       + (self.user_xy[:, 1] - xy[1]) ** 2 + altitude_km ** 2)
        pl = (20.0 * np.log10(4.0 * math.pi * d_km * 1000.0 * rf.carrier_hz
                              / ch.SPEED_OF_LIGHT)
              + rf.excess_db_hap_user)
        return 10.0 ** (-pl / 10.0)

    def gains(self, hap_xy: np.ndarray) -> np.ndarray:
        """Linear access channel gain per (user, serving station)."""
        g = self._gain_fixed.copy()
        for j, i in enumerate(self.hap_indices):
            g[:, i] = self._hap_gain(hap_xy[j], self.hap_altitudes[j])
        return g

    def solo_snr(self, gains: np.ndarray) -> np.ndarray:
        """Peak-power full-band SNR; equals the per-slice SNR at slice power."""
        with np.errstate(divide="ignore", invalid="ignore"):
            snr = self.peak[None, :] * gains / (self.noise * self.bw[None, :])
        return np.where(self.bw[None, :] > 0, snr, 0.0)

    def slot_rates(self, gains: np.ndarray) -> np.ndarray:
        """Access rate on one bandwidth slice at the slice power share.

        Zero where the station has no slices or the SNR falls below the
        in-range floor.
        """
        snr = self.solo_snr(gains)
        a = self.slice_hz * np.log2(1.0 + snr)
        a[snr < self.snr_floor] = 0.0
        a[:, self.caps <= 0] = 0.0
        return a

    def hap_position_map(self, hap_xy: np.ndarray) -> dict[int, Position3D]:
        return {
            hid: Position3D(float(hap_xy[j, 0]), float(hap_xy[j, 1]),
                            float(self.hap_altitudes[j]))
            for j, hid in enumerate(self.hap_ids)
        }

    def chain_array(self, backhaul, hap_xy: np.ndarray) -> np.ndarray:
        rates = ch.all_chain_rates(self.scenario, backhaul, self.params,
                                   self.hap_position_map(hap_xy))
        return np.array([rates[s.id] for s in self.stations], dtype=float)

    def greedy_assign(self, slot_rates: np.ndarray, chains: np.ndarray,
                      metric: UtilityMetric) -> np.ndarray:
        return kernels.greedy_assign(slot_rates, chains, self.qos, self.caps,
                                     METRIC_CODE[metric])

    def access_rates_uniform(self, gains: np.ndarray, assign: np.ndarray) -> np.ndarray:
        """Per-user access rate with peak power split equally among members."""
        n_users, n_stations = gains.shape
        access = np.zeros(n_users)
        served = assign >= 0
        if not served.any():
            return access
        counts = np.bincount(assign[served], minlength=n_stations).astype(float)
        p_u = self.peak[assign[served]] / counts[assign[served]]
        g_u = gains[np.arange(n_users)[served], assign[served]]
        access[served] = self.slice_hz * np.log2(
            1.0 + p_u * g_u / (self.noise * self.slice_hz))
        return access


def effective_from_access(access: np.ndarray, assign: np.ndarray, chains: np.ndarray,
                          n_stations: int) -> np.ndarray:
    """min(access rate, demand-proportional chain share), vectorized per station."""
    n_users = access.shape[0]
    rates = np.zeros(n_users)
    served = assign >= 0
    if not np.any(served):
        return rates
    r_own = access[served]
    sums = np.bincount(assign[served], weights=r_own, minlength=n_stations)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(sums > 0, np.minimum(1.0, chains / sums), 0.0)
    rates[served] = r_own * scale[assign[served]]
    return rates
