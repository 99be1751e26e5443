"""Domain types, scenario generation, validation, and rate-utility metrics.

The simulated world is a square area (km) with two dense user boxes
(subareas 1 and 2), a 3x3-style grid of terrestrial stations inside
subarea 1, renewable-powered relays inside subarea 2, stratospheric HAPs,
one satellite, and fixed gateways that terminate backhaul into the core.
All entities are immutable value records; generation is a pure function of
the configuration, including its RNG seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScenarioValidationError

HAP_ALTITUDE_MIN_KM = 17.0
HAP_ALTITUDE_MAX_KM = 20.0
GEO_ALTITUDE_KM = 35_786.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Position3D:
    """Point in km; z is altitude above ground."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError(f"position coordinates must be finite, got {self!r}")
        if self.z < 0.0:
            raise DomainError(f"altitude must be >= 0, got z={self.z}")

    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


def distance_km(a: Position3D, b: Position3D) -> float:
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


class StationKind(enum.Enum):
    TERRESTRIAL = "terrestrial"
    RELAY = "relay"
    HAP = "hap"
    SATELLITE = "satellite"


class UtilityMetric(enum.Enum):
    SUM_RATE = "sum_rate"
    MIN_RATE = "min_rate"
    PROPORTIONAL_FAIR = "proportional_fair"


@dataclass(frozen=True)
class User:
    id: int
    pos: Position3D
    qos_min_rate: float  # bit/s


@dataclass(frozen=True)
class BatteryState:
    """Stored energy of one relay at the end of slot `slot_index`."""

    capacity: float  # joule
    stored: float  # joule
    slot_index: int = 0


@dataclass(frozen=True)
class Station:
    id: int
    kind: StationKind
    pos: Position3D
    peak_power: float  # watt, access transmit budget (satellite: backhaul hop power)
    access_bandwidth: float = 0.0  # Hz
    battery: BatteryState | None = None
    backhaul_rate: float = 0.0  # bit/s, filled by channel.backhaul_chain_rate


@dataclass(frozen=True)
class Gateway:
    id: int
    pos: Position3D


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in km."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))


@dataclass(frozen=True)
class ScenarioConfig:
    area_side_km: float = 180.0
    subarea1_box: Box = Box(75.0, 105.0, 0.0, 30.0)
    subarea2_box: Box = Box(75.0, 105.0, 150.0, 180.0)
    user_count: int = 400
    user_split: tuple[float, float, float] = (0.4, 0.3, 0.3)
    terrestrial_count: int = 9
    relay_count: int = 3
    hap_count: int = 4
    gateway_count: int = 2
    hap_altitude_km: float = 18.0
    hap_peak_power_w: float = 10.0
    backhaul_bandwidth_hz: float = 100e6  # B0
    utility_metric: UtilityMetric = UtilityMetric.SUM_RATE
    seed: int = 1
    time_slots: int = 24
    # Station parameters not pinned by the experiment sweeps.
    terrestrial_peak_power_w: float = 100.0
    relay_peak_power_w: float = 10.0
    satellite_peak_power_w: float = 300.0
    satellite_altitude_km: float = GEO_ALTITUDE_KM
    terrestrial_access_bandwidth_hz: float = 50e6
    relay_access_bandwidth_hz: float = 20e6
    hap_access_bandwidth_hz: float = 50e6
    user_bandwidth_hz: float = 2e6  # per-user access slice; station cap = B/W slices
    qos_min_rate_bps: float = 100e3
    n_max_haps_per_parent: int = 3
    relay_battery_capacity_j: float = 200e3
    relay_battery_initial_fraction: float = 0.5


@dataclass(frozen=True)
class Scenario:
    users: tuple[User, ...]
    stations: tuple[Station, ...]
    gateways: tuple[Gateway, ...]
    config: ScenarioConfig

    def stations_of(self, kind: StationKind) -> tuple[Station, ...]:
        return tuple(s for s in self.stations if s.kind is kind)

    @property
    def satellite(self) -> Station:
        return self.stations_of(StationKind.SATELLITE)[0]

    def station_by_id(self, sid: int) -> Station:
        for s in self.stations:
            if s.id == sid:
                return s
        raise KeyError(f"no station with id {sid}")

    def gateway_by_id(self, gid: int) -> Gateway:
        for g in self.gateways:
            if g.id == gid:
                return g
        raise KeyError(f"no gateway with id {gid}")


def validate_config(config: ScenarioConfig) -> list[str]:
    """Return all invariant violations of a configuration (empty = valid)."""
    v: list[str] = []
    f1, f2, f3 = config.user_split
    if abs(f1 + f2 + f3 - 1.0) > 1e-9:
        v.append(f"config: user_split fractions sum to {f1 + f2 + f3}, expected 1")
    if min(f1, f2, f3) < 0:
        v.append("config: user_split fractions must be non-negative")
    if config.area_side_km <= 0:
        v.append("config: area_side_km must be positive")
    for name, box in (("subarea1", config.subarea1_box), ("subarea2", config.subarea2_box)):
        if box.x_min >= box.x_max or box.y_min >= box.y_max:
            v.append(f"config: {name}_box is degenerate")
        if (box.x_min < 0 or box.y_min < 0
                or box.x_max > config.area_side_km or box.y_max > config.area_side_km):
            v.append(f"config: {name}_box lies outside the area")
    if not HAP_ALTITUDE_MIN_KM <= config.hap_altitude_km <= HAP_ALTITUDE_MAX_KM:
        v.append(
            f"config: hap_altitude {config.hap_altitude_km} km outside "
            f"[{HAP_ALTITUDE_MIN_KM}, {HAP_ALTITUDE_MAX_KM}]"
        )
    if config.user_count < 0:
        v.append("config: user_count must be >= 0")
    if config.time_slots < 1:
        v.append("config: time_slots must be >= 1")
    for name in ("terrestrial_count", "relay_count", "hap_count", "gateway_count"):
        if getattr(config, name) < 0:
            v.append(f"config: {name} must be >= 0")
    for name in ("hap_peak_power_w", "terrestrial_peak_power_w", "relay_peak_power_w",
                 "satellite_peak_power_w"):
        if getattr(config, name) <= 0:
            v.append(f"config: {name} must be positive")
    if config.backhaul_bandwidth_hz <= 0:
        v.append("config: backhaul_bandwidth_hz must be positive")
    if config.user_bandwidth_hz <= 0:
        v.append("config: user_bandwidth_hz must be positive")
    if config.n_max_haps_per_parent < 1:
        v.append("config: n_max_haps_per_parent must be >= 1")
    if config.qos_min_rate_bps < 0:
        v.append("config: qos_min_rate_bps must be >= 0")
    if not 0.0 <= config.relay_battery_initial_fraction <= 1.0:
        v.append("config: relay_battery_initial_fraction must be in [0, 1]")
    return v


def split_user_counts(config: ScenarioConfig) -> tuple[int, int, int]:
    """Round-half-up counts for subareas 1 and 2; subarea 3 takes the rest."""
    u = config.user_count
    f1, f2, _ = config.user_split
    n1 = min(_round_half_up(f1 * u), u)
    n2 = min(_round_half_up(f2 * u), u - n1)
    return n1, n2, u - n1 - n2


def _uniform_in_box(rng: np.random.Generator, box: Box, n: int) -> np.ndarray:
    xs = rng.uniform(box.x_min, box.x_max, n)
    ys = rng.uniform(box.y_min, box.y_max, n)
    return np.column_stack([xs, ys])


def _uniform_outside_boxes(rng, side, boxes, n):
    # Rejection sampling keeps subarea 3 exactly "area minus both boxes".
    out = np.empty((n, 2))
    have = 0
    while have < n:
        cand = rng.uniform(0.0, side, size=(max(2 * (n - have), 8), 2))
        keep = np.ones(len(cand), dtype=bool)
        for b in boxes:
            keep &= ~((cand[:, 0] >= b.x_min) & (cand[:, 0] <= b.x_max)
                      & (cand[:, 1] >= b.y_min) & (cand[:, 1] <= b.y_max))
        cand = cand[keep]
        take = min(len(cand), n - have)
        out[have:have + take] = cand[:take]
        have += take
    return out


def _terrestrial_grid(box: Box, count: int) -> list[tuple[float, float]]:
    # k x k grid of cell centers covering the box, row-major, first `count` taken.
    k = max(1, math.ceil(math.sqrt(count)))
    w = (box.x_max - box.x_min) / k
    h = (box.y_max - box.y_min) / k
    pts = []
    for j in range(k):
        for i in range(k):
            pts.append((box.x_min + (i + 0.5) * w, box.y_min + (j + 0.5) * h))
    return pts[:count]


def _gateway_points(config: ScenarioConfig) -> list[tuple[float, float]]:
    # Gateways sit on the subarea-3 boundary: the top edge of box 1 and the
    # bottom edge of box 2, facing the open area.
    g = config.gateway_count
    n_top = math.ceil(g / 2)
    n_bot = g - n_top
    pts = []
    b1, b2 = config.subarea1_box, config.subarea2_box
    for j in range(n_top):
        x = b1.x_min + (b1.x_max - b1.x_min) * (j + 1) / (n_top + 1)
        pts.append((x, b1.y_max))
    for j in range(n_bot):
        x = b2.x_min + (b2.x_max - b2.x_min) * (j + 1) / (n_bot + 1)
        pts.append((x, b2.y_min))
    return pts


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Build the deterministic world for a configuration.

    Raises ScenarioValidationError when the configuration itself is invalid.
    """
    problems = validate_config(config)
    if problems:
        raise ScenarioValidationError(problems)

    rng = np.random.Generator(np.random.PCG64(config.seed))
    n1, n2, n3 = split_user_counts(config)
    xy1 = _uniform_in_box(rng, config.subarea1_box, n1)
    xy2 = _uniform_in_box(rng, config.subarea2_box, n2)
    xy3 = _uniform_outside_boxes(rng, config.area_side_km,
                                 (config.subarea1_box, config.subarea2_box), n3)
    users = tuple(
        User(id=i, pos=Position3D(float(x), float(y), 0.0),
             qos_min_rate=config.qos_min_rate_bps)
        for i, (x, y) in enumerate(np.concatenate([xy1, xy2, xy3], axis=0))
    )

    stations: list[Station] = []
    sid = 0
    for x, y in _terrestrial_grid(config.subarea1_box, config.terrestrial_count):
        stations.append(Station(
            id=sid, kind=StationKind.TERRESTRIAL, pos=Position3D(x, y, 0.0),
            peak_power=config.terrestrial_peak_power_w,
            access_bandwidth=config.terrestrial_access_bandwidth_hz))
        sid += 1
    relay_xy = _uniform_in_box(rng, config.subarea2_box, config.relay_count)
    for x, y in relay_xy:
        cap = config.relay_battery_capacity_j
        stations.append(Station(
            id=sid, kind=StationKind.RELAY, pos=Position3D(float(x), float(y), 0.0),
            peak_power=config.relay_peak_power_w,
            access_bandwidth=config.relay_access_bandwidth_hz,
            battery=BatteryState(capacity=cap,
                                 stored=cap * config.relay_battery_initial_fraction)))
        sid += 1
    for i in range(config.hap_count):
        x = config.area_side_km * (i + 1) / (config.hap_count + 1)
        stations.append(Station(
            id=sid, kind=StationKind.HAP,
            pos=Position3D(x, config.area_side_km / 2.0, config.hap_altitude_km),
            peak_power=config.hap_peak_power_w,
            access_bandwidth=config.hap_access_bandwidth_hz))
        sid += 1
    stations.append(Station(
        id=sid, kind=StationKind.SATELLITE,
        pos=Position3D(config.area_side_km / 2.0, config.area_side_km / 2.0,
                       config.satellite_altitude_km),
        peak_power=config.satellite_peak_power_w))
    sid += 1

    gateways = tuple(
        Gateway(id=sid + j, pos=Position3D(x, y, 0.0))
        for j, (x, y) in enumerate(_gateway_points(config))
    )
    return Scenario(users=users, stations=tuple(stations), gateways=gateways, config=config)


def validate_scenario(scenario: Scenario) -> list[str]:
    """Return every invariant violation, naming the offending entity (empty = ok)."""
    v = list(validate_config(scenario.config))
    cfg = scenario.config

    seen_users: set[int] = set()
    for u in scenario.users:
        if u.id in seen_users:
            v.append(f"user {u.id}: duplicate id")
        seen_users.add(u.id)
        if u.pos.z != 0.0:
            v.append(f"user {u.id}: z must be exactly 0, got {u.pos.z}")
        if not (0.0 <= u.pos.x <= cfg.area_side_km and 0.0 <= u.pos.y <= cfg.area_side_km):
            v.append(f"user {u.id}: position outside the area")
        if u.qos_min_rate < 0:
            v.append(f"user {u.id}: qos_min_rate must be >= 0")

    seen_nodes: set[int] = set()
    sat_count = 0
    for s in scenario.stations:
        if s.id in seen_nodes:
            v.append(f"station {s.id}: duplicate id")
        seen_nodes.add(s.id)
        if s.peak_power <= 0:
            v.append(f"station {s.id}: peak_power must be positive")
        if s.access_bandwidth < 0:
            v.append(f"station {s.id}: access_bandwidth must be >= 0")
        if s.backhaul_rate < 0:
            v.append(f"station {s.id}: backhaul_rate must be >= 0")
        if s.kind in (StationKind.TERRESTRIAL, StationKind.RELAY) and s.pos.z != 0.0:
            v.append(f"station {s.id}: {s.kind.value} station must sit at z=0")
        if s.kind is StationKind.HAP and not (
                HAP_ALTITUDE_MIN_KM <= s.pos.z <= HAP_ALTITUDE_MAX_KM):
            v.append(
                f"station {s.id}: hap_altitude {s.pos.z} km out of "
                f"[{HAP_ALTITUDE_MIN_KM}, {HAP_ALTITUDE_MAX_KM}]"
            )
        if s.kind is StationKind.SATELLITE:
            sat_count += 1
            if s.pos.z != cfg.satellite_altitude_km:
                v.append(f"station {s.id}: satellite altitude differs from configured "
                         f"{cfg.satellite_altitude_km} km")
        if (s.battery is not None) != (s.kind is StationKind.RELAY):
            v.append(f"station {s.id}: battery must be present iff kind is relay")
        if s.battery is not None and not (0.0 <= s.battery.stored <= s.battery.capacity):
            v.append(f"station {s.id}: battery stored {s.battery.stored} J outside "
                     f"[0, {s.battery.capacity}]")

    for g in scenario.gateways:
        if g.id in seen_nodes:
            v.append(f"gateway {g.id}: id collides with another node")
        seen_nodes.add(g.id)
        if g.pos.z != 0.0:
            v.append(f"gateway {g.id}: must sit at z=0")

    counts = {
        "user": (len(scenario.users), cfg.user_count),
        "terrestrial": (len(scenario.stations_of(StationKind.TERRESTRIAL)), cfg.terrestrial_count),
        "relay": (len(scenario.stations_of(StationKind.RELAY)), cfg.relay_count),
        "hap": (len(scenario.stations_of(StationKind.HAP)), cfg.hap_count),
        "gateway": (len(scenario.gateways), cfg.gateway_count),
    }
    for name, (got, want) in counts.items():
        if got != want:
            v.append(f"scenario: {name} count {got} differs from configured {want}")
    if sat_count != 1:
        v.append(f"scenario: expected exactly one satellite, found {sat_count}")

    n1, n2, n3 = split_user_counts(cfg)
    in1 = sum(1 for u in scenario.users if cfg.subarea1_box.contains(u.pos.x, u.pos.y))
    in2 = sum(1 for u in scenario.users if cfg.subarea2_box.contains(u.pos.x, u.pos.y))
    rest = len(scenario.users) - in1 - in2
    if len(scenario.users) == cfg.user_count and (in1, in2, rest) != (n1, n2, n3):
        v.append(f"scenario: subarea user counts {(in1, in2, rest)} differ from "
                 f"rounding rule {(n1, n2, n3)}")
    return v


def utility(rates, metric: UtilityMetric) -> float:
    """Aggregate per-user rates into a scalar utility.

    Empty input yields 0 for every metric. Negative or non-finite rates are
    rejected.
    """
    arr = np.asarray(list(rates), dtype=float)
    if arr.size == 0:
        return 0.0
    if not np.all(np.isfinite(arr)):
        raise DomainError("rates must be finite")
    if np.any(arr < 0):
        raise DomainError("rates must be non-negative")
    if metric is UtilityMetric.SUM_RATE:
        return float(np.sum(arr))
    if metric is UtilityMetric.MIN_RATE:
        return float(np.min(arr))
    if metric is UtilityMetric.PROPORTIONAL_FAIR:
        if np.any(arr == 0.0):
            return 0.0
        return float(np.exp(np.mean(np.log(arr))))
    raise DomainError(f"unknown utility metric {metric!r}")
