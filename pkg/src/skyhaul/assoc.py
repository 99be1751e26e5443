"""Access-link and backhaul-link association.

Users attach to at most one serving station (terrestrial, relay, or HAP;
never the satellite). Each HAP attaches to exactly one backhaul parent
(gateway or satellite) under a per-parent cap; ground stations uplink to
their best HAP, or a gateway when the direct hop is faster. The greedy
access solver maximizes marginal utility gains of effective (backhaul-
aware) rates; a seeded random variant provides the benchmark baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import channel as ch
from . import energy as en
from ._workspace import SolverWorkspace
from .errors import DomainError, InfeasibleError
from .model import Scenario, Station, StationKind, User, UtilityMetric


@dataclass(frozen=True)
class AccessAssignment:
    """user_id -> serving station_id; users absent from the map are unserved."""

    user_to_station: Mapping[int, int] = field(default_factory=dict)

    def station_of(self, user_id: int):
        return self.user_to_station.get(user_id)

    def users_of(self, station_id: int) -> tuple[int, ...]:
        return tuple(u for u, s in self.user_to_station.items() if s == station_id)

    def served_count(self) -> int:
        return len(self.user_to_station)


@dataclass(frozen=True)
class BackhaulAssignment:
    """hap_id -> parent (gateway or satellite); ground station_id -> uplink."""

    hap_parent: Mapping[int, int] = field(default_factory=dict)
    station_uplink: Mapping[int, int] = field(default_factory=dict)


def effective_user_rate(user: User, station: Station, powers: Mapping, bandwidths: Mapping,
                        backhaul: BackhaulAssignment, scenario: Scenario,
                        params: ch.ChannelParams) -> float:
    """Effective rate of one served user: min(access rate, backhaul share).

    The station's backhaul chain rate is divided among its users in
    proportion to their access-rate demand; `powers` and `bandwidths` are
    keyed by (station_id, user_id) and define that user group.
    """
    sid = station.id
    if (sid, user.id) not in powers:
        raise DomainError(f"user {user.id} has no power entry at station {sid}")
    users_by_id = {u.id: u for u in scenario.users}
    link = ch.access_link_class(station.kind)
    access: dict[int, float] = {}
    for (s, uid), p in powers.items():
        if s != sid:
            continue
        member = users_by_id[uid]
        pl = ch.rf_pathloss_db(link, station.pos, member.pos, params.rf)
        access[uid] = ch.rf_rate(bandwidths[(s, uid)], p, pl, params.rf)
    chain = ch.backhaul_chain_rate(station, backhaul, scenario, params)
    total = sum(access.values())
    own = access[user.id]
    share = chain * own / total if total > 0 else 0.0
    return min(own, share)


def _parent_hop_rate(scenario: Scenario, params: ch.ChannelParams, parent_id: int,
                     hap_pos) -> float:
    b0 = scenario.config.backhaul_bandwidth_hz
    sat = scenario.satellite
    if parent_id == sat.id:
        return ch.backhaul_hop_rate(ch.LinkClass.SAT_BACKHAUL, sat.pos, hap_pos, b0,
                                    sat.peak_power, params)
    gw = scenario.gateway_by_id(parent_id)
    return ch.backhaul_hop_rate(ch.LinkClass.RF_BACKHAUL, gw.pos, hap_pos, b0,
                                params.backhaul_tx_power_w, params)


def _chain_sum(scenario, hap_parent, hap_positions, params) -> float:
    """Sum of all HAP chain rates under sibling bandwidth sharing."""
    partial = BackhaulAssignment(hap_parent=hap_parent, station_uplink={})
    rates = ch.hap_chain_rates(scenario, partial, params,
                               hap_positions if hap_positions else None)
    return sum(rates.values())


def _repair_hap_parents(scenario, hap_parent, parents, n_max, hap_positions, params):
    """Move/swap improvement on the summed chain rates.

    The descending-rate greedy ignores that siblings split a parent link's
    bandwidth; this pass relocates single HAPs (and swaps parent pairs)
    while the total of chain rates improves.
    """
    if len(hap_parent) < 2:
        return hap_parent
    best_val = _chain_sum(scenario, hap_parent, hap_positions, params)
    hids = sorted(hap_parent)
    improved = True
    rounds = 0
    while improved and rounds < 4 * len(hap_parent):
        improved = False
        rounds += 1
        for hid in hids:
            current = hap_parent[hid]
            counts = {p: 0 for p in parents}
            for p in hap_parent.values():
                counts[p] += 1
            for p in parents:
                if p == current or counts[p] >= n_max:
                    continue
                cand = dict(hap_parent)
                cand[hid] = p
                val = _chain_sum(scenario, cand, hap_positions, params)
                if val > best_val:
                    hap_parent, best_val = cand, val
                    improved = True
        for i, hi in enumerate(hids):
            for hj in hids[i + 1:]:
                if hap_parent[hi] == hap_parent[hj]:
                    continue
                cand = dict(hap_parent)
                cand[hi], cand[hj] = cand[hj], cand[hi]
                val = _chain_sum(scenario, cand, hap_positions, params)
                if val > best_val:
                    hap_parent, best_val = cand, val
                    improved = True
    return hap_parent


def backhaul_associate(scenario: Scenario, hap_positions=None, n_max: int | None = None,
                       params: ch.ChannelParams | None = None) -> BackhaulAssignment:
    """Greedy backhaul association.

    HAPs claim parents in descending order of their best hop rate, each
    taking its fastest parent with capacity left under the per-parent cap;
    a repair pass then moves single HAPs between parents while the summed
    (sharing-aware) chain rate improves. Ground stations uplink to
    whichever HAP (post-sharing) or gateway gives the best chain
    bottleneck. Ties go to the lowest node id.
    """
    params = params or ch.ChannelParams()
    n_max = n_max if n_max is not None else scenario.config.n_max_haps_per_parent
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    haps = sorted(scenario.stations_of(StationKind.HAP), key=lambda s: s.id)
    parents = sorted([g.id for g in scenario.gateways] + [scenario.satellite.id])
    if len(haps) > n_max * len(parents):
        raise InfeasibleError(
            f"{len(haps)} HAPs exceed capacity {n_max} x {len(parents)} parents")
    hap_positions = hap_positions or {}

    rate_table = {}
    for h in haps:
        pos = hap_positions.get(h.id, h.pos)
        rate_table[h.id] = {p: _parent_hop_rate(scenario, params, p, pos)
                            for p in parents}
    order = sorted(haps, key=lambda h: (-max(rate_table[h.id].values()), h.id))
    remaining = {p: n_max for p in parents}
    hap_parent: dict[int, int] = {}
    for h in order:
        best, best_rate = None, -1.0
        for p in parents:
            if remaining[p] <= 0:
                continue
            r = rate_table[h.id][p]
            if r > best_rate:
                best, best_rate = p, r
        hap_parent[h.id] = best
        remaining[best] -= 1
    hap_parent = {h.id: hap_parent[h.id] for h in haps}
    hap_parent = _repair_hap_parents(scenario, hap_parent, parents, n_max,
                                     hap_positions, params)

    partial = BackhaulAssignment(hap_parent=hap_parent, station_uplink={})
    hap_chain = {
        h.id: ch.backhaul_chain_rate(h, partial, scenario, params) for h in haps}
    b0 = scenario.config.backhaul_bandwidth_hz
    station_uplink: dict[int, int] = {}
    ground = sorted((s for s in scenario.stations
                     if s.kind in (StationKind.TERRESTRIAL, StationKind.RELAY)),
                    key=lambda s: s.id)
    for s in ground:
        best, best_rate = None, -1.0
        for h in haps:
            pos = hap_positions.get(h.id, h.pos)
            hop = ch.backhaul_hop_rate(ch.LinkClass.RF_BACKHAUL, pos, s.pos, b0,
                                       params.backhaul_tx_power_w, params)
            r = min(hop, hap_chain[h.id])
            if r > best_rate:
                best, best_rate = h.id, r
        for g in sorted(scenario.gateways, key=lambda g: g.id):
            r = ch.backhaul_hop_rate(ch.LinkClass.RF_BACKHAUL, g.pos, s.pos, b0,
                                     params.backhaul_tx_power_w, params)
            if r > best_rate:
                best, best_rate = g.id, r
        station_uplink[s.id] = best
    return BackhaulAssignment(hap_parent=hap_parent, station_uplink=station_uplink)


def access_associate_greedy(scenario: Scenario, backhaul: BackhaulAssignment,
                            power_rule: str = "uniform",
                            metric: UtilityMetric | None = None,
                            params: ch.ChannelParams | None = None,
                            energy_params: en.EnergyParams | None = None,
                            hap_positions=None) -> AccessAssignment:
    """Greedy access association over marginal effective-rate utility gains.

    Repeatedly assigns the (user, station) pair with the largest marginal
    gain until no positive gain remains; users whose best effective rate
    would undershoot their QoS floor stay unserved.
    """
    if power_rule != "uniform":
        raise DomainError(f"unsupported power rule {power_rule!r}")
    params = params or ch.ChannelParams()
    energy_params = energy_params or en.EnergyParams()
    metric = metric or scenario.config.utility_metric
    ws = SolverWorkspace(scenario, params, energy_params)
    hap_xy = ws.initial_hap_xy.copy()
    if hap_positions:
        for j, hid in enumerate(ws.hap_ids):
            if hid in hap_positions:
                p = hap_positions[hid]
                hap_xy[j] = (p.x, p.y)
    slot = ws.slot_rates(ws.gains(hap_xy))
    chains = ws.chain_array(backhaul, hap_xy)
    assign = ws.greedy_assign(slot, chains, metric)
    return assignment_from_array(ws, assign)


def assignment_from_array(ws: SolverWorkspace, assign: np.ndarray) -> AccessAssignment:
    mapping = {int(ws.user_ids[u]): int(ws.station_ids[assign[u]])
               for u in range(len(assign)) if assign[u] >= 0}
    return AccessAssignment(user_to_station=mapping)


def array_from_assignment(ws: SolverWorkspace, access: AccessAssignment) -> np.ndarray:
    assign = np.full(len(ws.users), -1, dtype=np.int64)
    for i, uid in enumerate(ws.user_ids):
        sid = access.station_of(int(uid))
        if sid is not None:
            assign[i] = ws.station_index[sid]
    return assign


def random_associate(scenario: Scenario, hap_positions=None, n_max: int | None = None,
                     seed: int = 0, params: ch.ChannelParams | None = None,
                     energy_params: en.EnergyParams | None = None):
    """Uniformly random feasible associations, deterministic per seed.

    Access links pick uniformly among in-range stations with a free
    bandwidth slice; backhaul parents pick uniformly among parents with cap
    capacity left.
    """
    params = params or ch.ChannelParams()
    energy_params = energy_params or en.EnergyParams()
    n_max = n_max if n_max is not None else scenario.config.n_max_haps_per_parent
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    haps = sorted(scenario.stations_of(StationKind.HAP), key=lambda s: s.id)
    parents = sorted([g.id for g in scenario.gateways] + [scenario.satellite.id])
    if len(haps) > n_max * len(parents):
        raise InfeasibleError(
            f"{len(haps)} HAPs exceed capacity {n_max} x {len(parents)} parents")
    rng = np.random.Generator(np.random.PCG64(seed))

    remaining = {p: n_max for p in parents}
    hap_parent: dict[int, int] = {}
    for h in haps:
        cands = [p for p in parents if remaining[p] > 0]
        pick = cands[int(rng.integers(len(cands)))]
        hap_parent[h.id] = pick
        remaining[pick] -= 1

    uplink_cands = sorted([h.id for h in haps] + [g.id for g in scenario.gateways])
    station_uplink = {}
    for s in sorted((s for s in scenario.stations
                     if s.kind in (StationKind.TERRESTRIAL, StationKind.RELAY)),
                    key=lambda s: s.id):
        station_uplink[s.id] = uplink_cands[int(rng.integers(len(uplink_cands)))]
    backhaul = BackhaulAssignment(hap_parent=hap_parent, station_uplink=station_uplink)

    ws = SolverWorkspace(scenario, params, energy_params)
    hap_xy = ws.initial_hap_xy.copy()
    if hap_positions:
        for j, hid in enumerate(ws.hap_ids):
            if hid in hap_positions:
                p = hap_positions[hid]
                hap_xy[j] = (p.x, p.y)
    slot = ws.slot_rates(ws.gains(hap_xy))
    free = ws.caps.copy()
    mapping = {}
    for i in range(len(ws.users)):
        cands = np.nonzero((slot[i] > 0.0) & (free > 0))[0]
        if cands.size == 0:
            continue
        pick = int(cands[int(rng.integers(cands.size))])
        free[pick] -= 1
        mapping[int(ws.user_ids[i])] = int(ws.station_ids[pick])
    return AccessAssignment(user_to_station=mapping), backhaul
