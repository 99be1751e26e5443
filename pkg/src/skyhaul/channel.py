"""RF and FSO link budgets, Shannon rates, and backhaul chain rates.

Access links are RF. Backhaul hops are hybrid RF/FSO: each hop uses
whichever technology yields the higher Shannon rate. Ground-to-user links
follow a log-distance NLOS model; air and space links follow free-space
loss plus a per-class excess term (negative excess models directional
antenna gain). HAPs that share a backhaul parent split that parent link's
bandwidth equally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import ChainStructureError, DomainError
from .model import Position3D, Scenario, Station, StationKind, distance_km

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class LinkClass(enum.Enum):
    TERRESTRIAL_ACCESS = "terrestrial_access"  # terrestrial -> user, NLOS
    RELAY_ACCESS = "relay_access"              # relay -> user, NLOS
    HAP_ACCESS = "hap_access"                  # HAP -> user, free space
    SAT_BACKHAUL = "sat_backhaul"              # satellite -> HAP, free space
    RF_BACKHAUL = "rf_backhaul"                # gateway/HAP/station RF hops

    @property
    def is_nlos(self) -> bool:
        return self in (LinkClass.TERRESTRIAL_ACCESS, LinkClass.RELAY_ACCESS)

    @property
    def is_backhaul(self) -> bool:
        return self in (LinkClass.SAT_BACKHAUL, LinkClass.RF_BACKHAUL)


@dataclass(frozen=True)
class RfLinkParams:
    carrier_hz: float = 2e9
    backhaul_carrier_hz: float = 31e9
    pathloss_exponent_nlos: float = 3.6
    reference_distance_m: float = 100.0
    noise_density_w_hz: float = 10.0 ** (-174.0 / 10.0) * 1e-3  # -174 dBm/Hz
    # Excess loss per link class, dB; negative values fold in antenna gains.
    excess_db_terrestrial_user: float = 0.0
    excess_db_relay_user: float = 0.0
    excess_db_hap_user: float = 5.0
    excess_db_sat_hap: float = -90.0
    excess_db_rf_backhaul: float = -40.0

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.backhaul_carrier_hz <= 0:
            raise DomainError("carrier frequencies must be positive")
        if self.pathloss_exponent_nlos < 2.0:
            raise DomainError("NLOS pathloss exponent must be >= 2")
        if self.noise_density_w_hz <= 0:
            raise DomainError("noise density must be positive")
        if self.reference_distance_m <= 0:
            raise DomainError("reference distance must be positive")

    def carrier_for(self, link_class: LinkClass) -> float:
        return self.backhaul_carrier_hz if link_class.is_backhaul else self.carrier_hz

    def excess_for(self, link_class: LinkClass) -> float:
        return {
            LinkClass.TERRESTRIAL_ACCESS: self.excess_db_terrestrial_user,
            LinkClass.RELAY_ACCESS: self.excess_db_relay_user,
            LinkClass.HAP_ACCESS: self.excess_db_hap_user,
            LinkClass.SAT_BACKHAUL: self.excess_db_sat_hap,
            LinkClass.RF_BACKHAUL: self.excess_db_rf_backhaul,
        }[link_class]


@dataclass(frozen=True)
class FsoLinkParams:
    optical_bandwidth_hz: float = 1e9
    attenuation_per_km: float = 0.099  # natural units; ~0.43 dB/km clear air
    beam_divergence_rad: float = 1e-3
    responsivity_gain: float = 200.0  # aggregate transceiver/aperture efficiency
    pointing_jitter_rad: float = 1e-3

    def __post_init__(self):
        for f in ("optical_bandwidth_hz", "attenuation_per_km", "beam_divergence_rad",
                  "responsivity_gain", "pointing_jitter_rad"):
            if getattr(self, f) <= 0:
                raise DomainError(f"{f} must be positive")


@dataclass(frozen=True)
class ChannelParams:
    """Everything the link-budget layer needs, `channel.*` in config files."""

    rf: RfLinkParams = RfLinkParams()
    fso: FsoLinkParams = FsoLinkParams()
    fso_enabled: bool = True
    backhaul_tx_power_w: float = 5.0   # gateway/HAP transmitters on RF backhaul hops
    access_snr_floor_db: float = -5.0  # in-range predicate for access association


@dataclass(frozen=True)
class LinkBudget:
    distance_km: float
    received_snr: float
    rate: float  # bit/s


def free_space_pathloss_db(distance_m: float, frequency_hz: float) -> float:
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_hz / SPEED_OF_LIGHT)


def rf_pathloss_db(link_class: LinkClass, tx: Position3D, rx: Position3D,
                   params: RfLinkParams) -> float:
    """Pathloss in dB between two nodes for a given link class.

    Free-space classes: FSPL(d) + excess. NLOS classes: FSPL at the
    reference distance plus a log-distance term with the NLOS exponent.
    """
    d_m = distance_km(tx, rx) * 1000.0
    if d_m == 0.0:
        raise DomainError("pathloss undefined at zero distance")
    f = params.carrier_for(link_class)
    excess = params.excess_for(link_class)
    if link_class.is_nlos:
        d0 = params.reference_distance_m
        return (free_space_pathloss_db(d0, f)
                + 10.0 * params.pathloss_exponent_nlos * math.log10(d_m / d0)
                + excess)
    return free_space_pathloss_db(d_m, f) + excess


def rf_rate(bandwidth_hz: float, tx_power_w: float, pathloss_db: float,
            params: RfLinkParams) -> float:
    """Shannon rate of an RF link in bit/s; zero bandwidth or power gives 0."""
    if bandwidth_hz < 0 or tx_power_w < 0:
        raise DomainError("bandwidth and power must be non-negative")
    if bandwidth_hz == 0.0 or tx_power_w == 0.0:
        return 0.0
    snr = tx_power_w * 10.0 ** (-pathloss_db / 10.0) / (params.noise_density_w_hz * bandwidth_hz)
    return bandwidth_hz * math.log2(1.0 + snr)


def fso_snr(tx: Position3D, rx: Position3D, misalignment_rad: float,
            params: FsoLinkParams) -> float:
    d = distance_km(tx, rx)
    if d == 0.0:
        raise DomainError("FSO link undefined at zero distance")
    if not math.isfinite(misalignment_rad) or not 0.0 <= misalignment_rad <= math.pi:
        raise DomainError(f"misalignment must be in [0, pi], got {misalignment_rad}")
    spreading = 1.0 / (params.beam_divergence_rad * d) ** 2
    pointing = math.exp(-misalignment_rad ** 2 / (2.0 * params.pointing_jitter_rad ** 2))
    return (params.responsivity_gain * math.exp(-params.attenuation_per_km * d)
            * spreading * pointing)


def fso_rate(tx: Position3D, rx: Position3D, misalignment_rad: float,
             params: FsoLinkParams, bandwidth_hz: float | None = None) -> float:
    """Shannon rate of an FSO hop; optional bandwidth override for shared links."""
    bw = params.optical_bandwidth_hz if bandwidth_hz is None else bandwidth_hz
    if bw <= 0.0:
        return 0.0
    return bw * math.log2(1.0 + fso_snr(tx, rx, misalignment_rad, params))


def rf_link_budget(link_class: LinkClass, tx: Position3D, rx: Position3D,
                   bandwidth_hz: float, tx_power_w: float,
                   params: RfLinkParams) -> LinkBudget:
    pl = rf_pathloss_db(link_class, tx, rx, params)
    rate = rf_rate(bandwidth_hz, tx_power_w, pl, params)
    snr = 0.0
    if bandwidth_hz > 0 and tx_power_w > 0:
        snr = tx_power_w * 10.0 ** (-pl / 10.0) / (params.noise_density_w_hz * bandwidth_hz)
    return LinkBudget(distance_km=distance_km(tx, rx), received_snr=snr, rate=rate)


def backhaul_hop_rate(link_class: LinkClass, tx: Position3D, rx: Position3D,
                      rf_bandwidth_hz: float, tx_power_w: float, params: ChannelParams,
                      share: int = 1, misalignment_rad: float = 0.0) -> float:
    """Rate of one backhaul hop: best of RF and (if enabled) FSO.

    `share` > 1 models siblings splitting the hop's bandwidth equally; it
    scales both the RF and the optical bandwidth.
    """
    if share < 1:
        raise DomainError("share must be >= 1")
    pl = rf_pathloss_db(link_class, tx, rx, params.rf)
    rate = rf_rate(rf_bandwidth_hz / share, tx_power_w, pl, params.rf)
    if params.fso_enabled:
        rate = max(rate, fso_rate(tx, rx, misalignment_rad, params.fso,
                                  bandwidth_hz=params.fso.optical_bandwidth_hz / share))
    return rate


class _ChainContext:
    """Per-call cache for chain-rate evaluation (parent counts, positions)."""

    def __init__(self, scenario: Scenario, backhaul, params: ChannelParams,
                 hap_positions: dict[int, Position3D] | None = None):
        self.scenario = scenario
        self.backhaul = backhaul
        self.params = params
        self.b0 = scenario.config.backhaul_bandwidth_hz
        self.satellite = scenario.satellite
        self.gateway_pos = {g.id: g.pos for g in scenario.gateways}
        self.parent_counts: dict[int, int] = {}
        for parent in backhaul.hap_parent.values():
            self.parent_counts[parent] = self.parent_counts.get(parent, 0) + 1
        self.hap_pos: dict[int, Position3D] = {
            s.id: s.pos for s in scenario.stations if s.kind is StationKind.HAP}
        if hap_positions:
            self.hap_pos.update(hap_positions)
        self._hap_chain: dict[int, float] = {}

    def hap_chain(self, hap_id: int) -> float:
        if hap_id in self._hap_chain:
            return self._hap_chain[hap_id]
        if hap_id not in self.backhaul.hap_parent:
            raise ChainStructureError(f"hap {hap_id} has no backhaul parent")
        parent_id = self.backhaul.hap_parent[hap_id]
        share = self.parent_counts[parent_id]
        hap_pos = self.hap_pos[hap_id]
        if parent_id == self.satellite.id:
            rate = backhaul_hop_rate(LinkClass.SAT_BACKHAUL, self.satellite.pos, hap_pos,
                                     self.b0, self.satellite.peak_power, self.params,
                                     share=share)
        elif parent_id in self.gateway_pos:
            rate = backhaul_hop_rate(LinkClass.RF_BACKHAUL, self.gateway_pos[parent_id],
                                     hap_pos, self.b0, self.params.backhaul_tx_power_w,
                                     self.params, share=share)
        else:
            raise ChainStructureError(
                f"hap {hap_id} parent {parent_id} is neither gateway nor satellite")
        self._hap_chain[hap_id] = rate
        return rate

    def station_chain(self, station: Station) -> float:
        if station.kind is StationKind.SATELLITE:
            raise DomainError("satellite is a backhaul parent, not a served station")
        if station.kind is StationKind.HAP:
            return self.hap_chain(station.id)
        if station.id not in self.backhaul.station_uplink:
            raise ChainStructureError(f"station {station.id} has no backhaul uplink")
        uplink_id = self.backhaul.station_uplink[station.id]
        if uplink_id in self.gateway_pos:
            return backhaul_hop_rate(LinkClass.RF_BACKHAUL, self.gateway_pos[uplink_id],
                                     station.pos, self.b0,
                                     self.params.backhaul_tx_power_w, self.params)
        if uplink_id not in self.hap_pos:
            raise ChainStructureError(
                f"station {station.id} uplink {uplink_id} is not a HAP or gateway")
        hop = backhaul_hop_rate(LinkClass.RF_BACKHAUL, self.hap_pos[uplink_id],
                                station.pos, self.b0,
                                self.params.backhaul_tx_power_w, self.params)
        return min(hop, self.hap_chain(uplink_id))


def backhaul_chain_rate(station: Station, backhaul, scenario: Scenario,
                        params: ChannelParams) -> float:
    """Minimum link rate along a serving station's path to the core.

    HAP: its (shared) parent hop. Terrestrial/relay: the hop to its uplink,
    and when the uplink is a HAP, also that HAP's parent hop.
    Raises ChainStructureError when a node on the chain is unassigned.
    """
    return _ChainContext(scenario, backhaul, params).station_chain(station)


def all_chain_rates(scenario: Scenario, backhaul, params: ChannelParams,
                    hap_positions: dict[int, Position3D] | None = None) -> dict[int, float]:
    """Chain rate of every serving station, optionally with moved HAPs."""
    ctx = _ChainContext(scenario, backhaul, params, hap_positions)
    return {s.id: ctx.station_chain(s) for s in scenario.stations
            if s.kind is not StationKind.SATELLITE}


def hap_chain_rates(scenario: Scenario, backhaul, params: ChannelParams,
                    hap_positions: dict[int, Position3D] | None = None) -> dict[int, float]:
    """Chain rate of every HAP only; usable before station uplinks exist."""
    ctx = _ChainContext(scenario, backhaul, params, hap_positions)
    return {s.id: ctx.hap_chain(s.id) for s in scenario.stations
            if s.kind is StationKind.HAP}


def access_link_class(kind: StationKind) -> LinkClass:
    if kind is StationKind.TERRESTRIAL:
        return LinkClass.TERRESTRIAL_ACCESS
    if kind is StationKind.RELAY:
        return LinkClass.RELAY_ACCESS
    if kind is StationKind.HAP:
        return LinkClass.HAP_ACCESS
    raise DomainError(f"{kind} does not serve access links")
