"""Power allocation, HAP placement, FSO alignment, and the four end-to-end solvers.

solve_approx runs block-coordinate ascent over backhaul association, HAP
placement (a pattern search whose objective re-runs association and power
allocation), greedy access association, and per-station power allocation;
every block keeps its previous state unless the move improves the
objective, so the utility trace is non-decreasing. solve_lowcomplexity is
a single pass with clustered HAP placement plus an optional pin of one HAP
over the terrestrial coverage box under heavy load. The two benchmarks
drop power optimization (bench1) and additionally freeze random
associations (bench2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _kernels as kernels
from . import channel as ch
from . import energy as en
from ._workspace import SolverWorkspace, effective_from_access
from .assoc import (AccessAssignment, BackhaulAssignment, assignment_from_array,
                    array_from_assignment, backhaul_associate, random_associate)
from .errors import DomainError
from .model import Position3D, Scenario, StationKind, UtilityMetric, utility


class SolverTag(enum.Enum):
    APPROX = "approx"
    LOW_COMPLEXITY = "lowcomplexity"
    BENCH1 = "bench1"
    BENCH2 = "bench2"


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iterations: int = 3
    convergence_epsilon: float = 1e-3  # relative utility change
    placement_step_schedule: tuple[float, ...] = (10.0, 5.0, 2.0, 1.0, 0.5)  # km
    power_bisection_tolerance: float = 1e-6  # watt
    pin_load_threshold: float = 12.0  # subarea-1 users per terrestrial station

    def __post_init__(self):
        if self.max_outer_iterations < 1 or self.convergence_epsilon <= 0:
            raise DomainError("solver iteration controls must be positive")
        if self.power_bisection_tolerance <= 0:
            raise DomainError("power_bisection_tolerance must be positive")
        steps = self.placement_step_schedule
        if not steps or any(s <= 0 for s in steps):
            raise DomainError("placement steps must be positive")
        if any(b >= a for a, b in zip(steps, steps[1:])):
            raise DomainError("placement_step_schedule must be strictly decreasing")


@dataclass(frozen=True)
class Solution:
    access: AccessAssignment
    backhaul: BackhaulAssignment
    hap_positions: tuple[Position3D, ...]
    powers: Mapping[tuple[int, int], float]      # (station_id, user_id) -> watt
    bandwidths: Mapping[tuple[int, int], float]  # (station_id, user_id) -> Hz
    per_user_rate: Mapping[int, float]           # user_id -> bit/s (0 = unserved)
    utility_value: float
    iterations: int
    solver_tag: SolverTag
    chain_rates: Mapping[int, float] = field(default_factory=dict)
    battery_traces: Mapping[int, tuple[float, ...]] = field(default_factory=dict)
    score_trace: tuple[float, ...] = ()

    def served_users(self) -> tuple[int, ...]:
        return tuple(sorted(self.access.user_to_station))


# ---------------------------------------------------------------------------
# Power allocation


def allocate_power_uniform(station, assigned_users) -> dict:
    """peak_power split equally: each of n >= 1 users gets peak/n."""
    users = list(assigned_users)
    if not users:
        raise DomainError("uniform allocation needs at least one assigned user")
    share = station.peak_power / len(users)
    return {(station.id, uid): share for uid in users}


def allocate_power_waterfill(budget: float, effective_noise: Sequence[float],
                             bandwidths: Sequence[float], tolerance: float) -> np.ndarray:
    """Sum-rate-optimal split: powers_i = max(0, mu*bn_i - noise_i).

    The water level mu is found by bisection until the powers sum to
    `budget` within `tolerance` watts. effective_noise_i is the user's
    noise-over-gain term N0*b_i/g_i.
    """
    eff = np.asarray(effective_noise, dtype=float)
    bw = np.asarray(bandwidths, dtype=float)
    if budget <= 0:
        raise DomainError("budget must be positive")
    if eff.size == 0 or np.any(eff <= 0) or np.any(bw <= 0):
        raise DomainError("effective noise and bandwidths must be positive")
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    return kernels.waterfill(budget, eff, bw, tolerance)


def allocate_power_maxmin(budget: float, rate_functions: Sequence[Callable[[float], float]],
                          tolerance: float) -> np.ndarray:
    """Max-min power split by bisection on the common achievable rate.

    Each rate function must be continuous, increasing, and zero at zero
    power. Returns powers summing to <= budget with every user at the
    largest feasible common rate (within `tolerance` of using the budget).
    """
    if budget <= 0 or tolerance <= 0:
        raise DomainError("budget and tolerance must be positive")
    if not rate_functions:
        raise DomainError("need at least one rate function")

    def power_for(fn, rate):
        # Invert fn by bisection; fn is increasing with fn(0) = 0.
        if rate <= 0:
            return 0.0
        hi = 1.0
        while fn(hi) < rate:
            hi *= 2.0
            if hi > 1e18:
                return math.inf
        lo = 0.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if fn(mid) < rate:
                lo = mid
            else:
                hi = mid
        return hi

    def total_power(rate):
        return sum(power_for(fn, rate) for fn in rate_functions)

    hi = max(fn(budget) for fn in rate_functions)
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total_power(mid) <= budget:
            lo = mid
        else:
            hi = mid
        if budget - total_power(lo) <= tolerance:
            break
    return np.array([power_for(fn, lo) for fn in rate_functions])


def _maxmin_shannon(budget: float, eff: np.ndarray, bw: np.ndarray,
                    tol: float) -> np.ndarray:
    """Vectorized max-min powers for Shannon rates b*log2(1 + p/eff)."""
    if budget <= 0 or eff.size == 0:
        return np.zeros(eff.size)

    def need(rate):
        return eff * (np.exp2(rate / bw) - 1.0)

    hi = float(np.max(bw * np.log2(1.0 + budget / eff)))
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(need(mid).sum()) <= budget:
            lo = mid
        else:
            hi = mid
        if budget - float(need(lo).sum()) <= tol:
            break
    return need(lo)


# ---------------------------------------------------------------------------
# Placement and alignment


def place_haps_weighted_centroid(served_points, altitude_km: float) -> Position3D:
    """Weighted centroid of (Position3D, weight) pairs at the given altitude."""
    pts = list(served_points)
    if not pts:
        raise DomainError("centroid needs at least one point")
    if any(w < 0 for _, w in pts):
        raise DomainError("weights must be non-negative")
    total = sum(w for _, w in pts)
    if total <= 0:
        raise DomainError("total weight must be positive")
    x = sum(p.x * w for p, w in pts) / total
    y = sum(p.y * w for p, w in pts) / total
    return Position3D(x, y, altitude_km)


def place_haps_localsearch(initial_xy: np.ndarray, objective, schedule,
                           bounds: tuple[float, float, float, float],
                           max_passes_per_step: int = 64):
    """Coordinate pattern search over HAP x-y positions.

    For each step size, sweep the HAPs until a full pass yields no
    improving move; each HAP probes +-step on x and y and takes the best
    strictly improving move, clamped to `bounds`. The accepted objective
    value never decreases. Returns (positions, best value).
    """
    xy = np.array(initial_xy, dtype=float).copy()
    n = xy.shape[0]
    best = objective(xy)
    x_min, x_max, y_min, y_max = bounds
    for step in schedule:
        for _ in range(max_passes_per_step):
            improved = False
            for i in range(n):
                base = xy[i].copy()
                best_move = None
                for dx, dy in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
                    cand = (min(max(base[0] + dx, x_min), x_max),
                            min(max(base[1] + dy, y_min), y_max))
                    if cand == (base[0], base[1]):
                        continue
                    xy[i] = cand
                    val = objective(xy)
                    if val > best:
                        best = val
                        best_move = cand
                xy[i] = base if best_move is None else best_move
                improved = improved or best_move is not None
            if not improved:
                break
    return xy, best


def align_fso(tx: Position3D, rx: Position3D) -> np.ndarray:
    """Unit pointing vector from tx toward rx."""
    v = np.array([rx.x - tx.x, rx.y - tx.y, rx.z - tx.z], dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DomainError("cannot align coincident transceivers")
    return v / norm


def misalignment(current: np.ndarray, tx: Position3D, rx: Position3D) -> float:
    """Angle in [0, pi] between `current` pointing and the ideal LoS vector."""
    cur = np.asarray(current, dtype=float)
    norm = float(np.linalg.norm(cur))
    if norm == 0.0:
        raise DomainError("current pointing vector has zero length")
    ideal = align_fso(tx, rx)
    cosang = float(np.dot(cur / norm, ideal))
    return math.acos(min(1.0, max(-1.0, cosang)))


# ---------------------------------------------------------------------------
# Shared solver machinery


@dataclass
class _Eval:
    score: tuple
    assign: np.ndarray
    rates: np.ndarray        # effective per-user rates, workspace order
    access_rates: np.ndarray
    powers: np.ndarray       # per-user transmit power
    chains: np.ndarray


def _score(rates: np.ndarray, assign: np.ndarray, metric: UtilityMetric) -> tuple:
    """Internal solver objective as a comparable tuple.

    Sum rate compares raw sums (admitting a user never lowers the sum under
    slice bandwidth). Min-rate and proportional-fair put the served count
    first so coverage is never traded away; sum-of-logs stands in for the
    geometric mean on a fixed served set.
    """
    served = assign >= 0
    n_served = int(served.sum())
    if n_served == 0:
        return (0, 0.0)
    r = rates[served]
    if metric is UtilityMetric.SUM_RATE:
        return (0, float(r.sum()))
    if metric is UtilityMetric.MIN_RATE:
        return (n_served, float(r.min()))
    with np.errstate(divide="ignore"):
        logs = np.log(np.maximum(r, 0.0))
    return (n_served, float(logs.sum()))


def _evaluate(ws: SolverWorkspace, backhaul: BackhaulAssignment, hap_xy: np.ndarray,
              metric: UtilityMetric, optimize_power: bool, tol: float,
              fixed_assign: np.ndarray | None = None) -> _Eval:
    """Association + power allocation for one placement/backhaul candidate."""
    gains = ws.gains(hap_xy)
    chains = ws.chain_array(backhaul, hap_xy)
    if fixed_assign is None:
        assign = ws.greedy_assign(ws.slot_rates(gains), chains, metric)
    else:
        assign = fixed_assign
    n_users, n_stations = gains.shape
    served = assign >= 0

    u_access = ws.access_rates_uniform(gains, assign)
    u_rates = effective_from_access(u_access, assign, chains, n_stations)
    uniform_powers = np.zeros(n_users)
    if served.any():
        counts = np.bincount(assign[served], minlength=n_stations).astype(float)
        uniform_powers[served] = ws.peak[assign[served]] / counts[assign[served]]

    if not optimize_power or not served.any():
        return _Eval(_score(u_rates, assign, metric), assign, u_rates, u_access,
                     uniform_powers, chains)

    g_own = np.zeros(n_users)
    g_own[served] = gains[served, assign[served]]
    ok = served & (g_own > 0)
    eff = np.full(n_users, np.inf)
    eff[ok] = ws.noise * ws.slice_hz / g_own[ok]
    slice_bw = np.full(n_users, ws.slice_hz)

    if metric is UtilityMetric.MIN_RATE:
        powers = np.zeros(n_users)
        for s in range(n_stations):
            idx = np.nonzero((assign == s) & ok)[0]
            if idx.size == 0:
                continue
            powers[idx] = _maxmin_shannon(float(ws.peak[s]), eff[idx],
                                          slice_bw[idx], tol)
    else:
        powers = kernels.waterfill_groups(ws.peak, np.where(ok, eff, 1.0), slice_bw,
                                          np.where(ok, assign, -1), n_stations, tol)
        powers = np.where(ok, powers, 0.0)

    access = np.zeros(n_users)
    access[ok] = ws.slice_hz * np.log2(1.0 + powers[ok] / eff[ok])
    rates = effective_from_access(access, assign, chains, n_stations)

    # Keep whichever power split scores better (uniform is the safe floor).
    cand = _score(rates, assign, metric)
    base = _score(u_rates, assign, metric)
    if cand >= base:
        return _Eval(cand, assign, rates, access, powers, chains)
    return _Eval(base, assign, u_rates, u_access, uniform_powers, chains)


_GROUND_COVERED_WEIGHT = 0.02  # users a ground station can already reach


def _cluster_hap_xy(ws: SolverWorkspace, iterations: int = 25) -> np.ndarray:
    """Weighted-centroid clustering of users for the HAP placement.

    Lloyd iterations over user positions where users already reachable by a
    terrestrial station or relay carry a near-zero weight, so the HAPs
    gravitate toward the uncovered demand. Deterministic: seeded by the
    initial HAP spread, updated via the weighted-centroid rule.
    """
    centers = ws.initial_hap_xy.copy()
    if len(ws.users) == 0 or centers.shape[0] == 0:
        return centers
    pts = ws.user_xy
    snr = ws.solo_snr(ws.gains(centers))
    ground = [i for i, k in enumerate(ws.kinds)
              if k in (StationKind.TERRESTRIAL, StationKind.RELAY)]
    covered = np.zeros(len(ws.users), dtype=bool)
    if ground:
        covered = (snr[:, ground] >= ws.snr_floor).any(axis=1)
    w = np.where(covered, _GROUND_COVERED_WEIGHT, 1.0)
    positions = [Position3D(float(x), float(y), 0.0) for x, y in pts]
    for _ in range(iterations):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        new = centers.copy()
        for j in range(centers.shape[0]):
            sel = np.nonzero(labels == j)[0]
            if sel.size and w[sel].sum() > 0:
                c = place_haps_weighted_centroid(
                    [(positions[i], w[i]) for i in sel], ws.hap_altitudes[j])
                new[j] = (c.x, c.y)
        done = np.allclose(new, centers, atol=1e-9)
        centers = new
        if done:
            break
    return centers


def _battery_traces(ws: SolverWorkspace, tx_by_station: dict[int, float]):
    """Per-relay stored-energy traces for the solved transmit powers."""
    traces = {}
    cfg = ws.scenario.config
    for s in ws.stations:
        if s.kind is not StationKind.RELAY:
            continue
        cap = ws.sustainable.get(s.id, 0.0)
        tx = min(tx_by_station.get(s.id, 0.0), cap)
        if cap <= 0.0:
            # Parked relay: no operating draw, battery just harvests.
            state = s.battery
            vals = []
            for t in range(cfg.time_slots):
                state = en.step_battery(
                    state, en.harvest(ws.energy_params.profile, t), 0.0)
                vals.append(state.stored)
            traces[s.id] = tuple(vals)
            continue
        trace = en.simulate_trace(s.battery, ws.energy_params, tx, cfg.time_slots)
        traces[s.id] = tuple(b.stored for b in trace)
    return traces


def _build_solution(ws: SolverWorkspace, ev: _Eval, backhaul: BackhaulAssignment,
                    hap_xy: np.ndarray, metric: UtilityMetric, iterations: int,
                    tag: SolverTag, score_trace: tuple) -> Solution:
    assign = ev.assign
    served = assign >= 0
    access = assignment_from_array(ws, assign)
    n_stations = len(ws.stations)
    powers = {}
    bandwidths = {}
    tx_by_station: dict[int, float] = {}
    for i in np.nonzero(served)[0]:
        s = int(assign[i])
        sid = int(ws.station_ids[s])
        uid = int(ws.user_ids[i])
        powers[(sid, uid)] = float(ev.powers[i])
        bandwidths[(sid, uid)] = float(ws.slice_hz)
        tx_by_station[sid] = tx_by_station.get(sid, 0.0) + float(ev.powers[i])
    per_user_rate = {int(ws.user_ids[i]): float(ev.rates[i])
                     for i in range(len(ws.users))}
    hap_positions = tuple(
        Position3D(float(hap_xy[j, 0]), float(hap_xy[j, 1]), float(ws.hap_altitudes[j]))
        for j in range(hap_xy.shape[0]))
    chain_rates = {int(ws.station_ids[i]): float(ev.chains[i])
                   for i in range(n_stations)}
    value = utility(np.maximum(ev.rates, 0.0), metric)
    return Solution(
        access=access, backhaul=backhaul, hap_positions=hap_positions,
        powers=powers, bandwidths=bandwidths, per_user_rate=per_user_rate,
        utility_value=value, iterations=iterations, solver_tag=tag,
        chain_rates=chain_rates, battery_traces=_battery_traces(ws, tx_by_station),
        score_trace=score_trace)


def _area_bounds(scenario: Scenario) -> tuple[float, float, float, float]:
    side = scenario.config.area_side_km
    return (0.0, side, 0.0, side)


def _prepare(scenario, solver_config, metric, params, energy_params):
    params = params or ch.ChannelParams()
    energy_params = energy_params or en.EnergyParams()
    solver_config = solver_config or SolverConfig()
    metric = metric or scenario.config.utility_metric
    ws = SolverWorkspace(scenario, params, energy_params)
    return ws, solver_config, metric, params


def _solve_blocks(ws: SolverWorkspace, cfg: SolverConfig, metric: UtilityMetric,
                  params: ch.ChannelParams):
    """Block-coordinate loop over backhaul, placement, and greedy association.

    Placement probes are scored at uniform power (the cheap surrogate); the
    callers bolt on the final power-allocation block. Returns
    (backhaul, hap_xy, eval, iterations, trace).
    """
    scenario = ws.scenario
    tol = cfg.power_bisection_tolerance
    hap_xy = _cluster_hap_xy(ws)
    backhaul = backhaul_associate(scenario, ws.hap_position_map(hap_xy), params=params)
    ev = _evaluate(ws, backhaul, hap_xy, metric, False, tol)
    trace = [ev.score]
    iterations = 0
    for _ in range(cfg.max_outer_iterations):
        iterations += 1
        # Block 1: backhaul association, kept only when it improves.
        cand_bh = backhaul_associate(scenario, ws.hap_position_map(hap_xy),
                                     params=params)
        cand_ev = _evaluate(ws, cand_bh, hap_xy, metric, False, tol)
        if cand_ev.score > ev.score:
            backhaul, ev = cand_bh, cand_ev

        # Block 2: placement; its objective re-runs the greedy association.
        cache: dict[bytes, tuple] = {}

        def objective(xy, _bh=backhaul):
            key = xy.tobytes()
            if key not in cache:
                cache[key] = _evaluate(ws, _bh, xy, metric, False, tol).score
            return cache[key]

        new_xy, new_score = place_haps_localsearch(
            hap_xy, objective, cfg.placement_step_schedule, _area_bounds(scenario))
        if new_score > ev.score:
            hap_xy = new_xy
            ev = _evaluate(ws, backhaul, hap_xy, metric, False, tol)

        trace.append(ev.score)
        prev, cur = trace[-2], trace[-1]
        if prev[0] == cur[0] and abs(cur[1] - prev[1]) <= \
                cfg.convergence_epsilon * max(abs(prev[1]), 1e-12):
            break
    return backhaul, hap_xy, ev, iterations, trace


# ---------------------------------------------------------------------------
# Solvers


def solve_approx(scenario: Scenario, solver_config: SolverConfig | None = None,
                 metric: UtilityMetric | None = None,
                 params: ch.ChannelParams | None = None,
                 energy_params: en.EnergyParams | None = None) -> Solution:
    """Block-coordinate ascent over backhaul, placement, association, power.

    Shares the association/placement trajectory with solve_benchmark1 and
    then applies the metric's power-allocation block to the converged
    configuration (water-filling for sum rate, bisection max-min for min
    rate, guarded water-filling for proportional fairness), so its utility
    dominates the uniform-power benchmark by construction.
    """
    ws, cfg, metric, params = _prepare(scenario, solver_config, metric, params,
                                       energy_params)
    backhaul, hap_xy, ev, iterations, trace = _solve_blocks(ws, cfg, metric, params)
    final = _evaluate(ws, backhaul, hap_xy, metric, True, cfg.power_bisection_tolerance,
                      fixed_assign=ev.assign)
    trace.append(final.score)
    return _build_solution(ws, final, backhaul, hap_xy, metric, iterations,
                           SolverTag.APPROX, tuple(t[1] for t in trace))


def solve_benchmark1(scenario: Scenario, solver_config: SolverConfig | None = None,
                     metric: UtilityMetric | None = None,
                     params: ch.ChannelParams | None = None,
                     energy_params: en.EnergyParams | None = None) -> Solution:
    """solve_approx's trajectory with uniform power (no power optimization)."""
    ws, cfg, metric, params = _prepare(scenario, solver_config, metric, params,
                                       energy_params)
    backhaul, hap_xy, ev, iterations, trace = _solve_blocks(ws, cfg, metric, params)
    return _build_solution(ws, ev, backhaul, hap_xy, metric, iterations,
                           SolverTag.BENCH1, tuple(t[1] for t in trace))


def solve_lowcomplexity(scenario: Scenario, solver_config: SolverConfig | None = None,
                        metric: UtilityMetric | None = None,
                        params: ch.ChannelParams | None = None,
                        energy_params: en.EnergyParams | None = None) -> Solution:
    """One pass: clustered placement (with the terrestrial pin rule), then
    backhaul association, greedy access, and the metric's power step."""
    ws, cfg, metric, params = _prepare(scenario, solver_config, metric, params,
                                       energy_params)
    hap_xy = _cluster_hap_xy(ws)
    sub1 = scenario.config.subarea1_box
    n_terr = max(1, scenario.config.terrestrial_count)
    in_sub1 = sum(1 for u in ws.users if sub1.contains(u.pos.x, u.pos.y))
    if hap_xy.shape[0] and in_sub1 / n_terr > cfg.pin_load_threshold:
        cx, cy = sub1.center()
        d2 = (hap_xy[:, 0] - cx) ** 2 + (hap_xy[:, 1] - cy) ** 2
        hap_xy[int(np.argmin(d2))] = (cx, cy)
    backhaul = backhaul_associate(scenario, ws.hap_position_map(hap_xy), params=params)
    ev = _evaluate(ws, backhaul, hap_xy, metric, True, cfg.power_bisection_tolerance)
    return _build_solution(ws, ev, backhaul, hap_xy, metric, 1,
                           SolverTag.LOW_COMPLEXITY, (ev.score[1],))


def solve_benchmark2(scenario: Scenario, solver_config: SolverConfig | None = None,
                     metric: UtilityMetric | None = None,
                     params: ch.ChannelParams | None = None,
                     energy_params: en.EnergyParams | None = None) -> Solution:
    """Random associations (seeded by the scenario), placement only, uniform power."""
    ws, cfg, metric, params = _prepare(scenario, solver_config, metric, params,
                                       energy_params)
    tol = cfg.power_bisection_tolerance
    access, backhaul = random_associate(scenario, seed=scenario.config.seed,
                                        params=params, energy_params=ws.energy_params)
    fixed = array_from_assignment(ws, access)
    hap_xy = ws.initial_hap_xy.copy()

    cache: dict[bytes, tuple] = {}

    def objective(xy):
        key = xy.tobytes()
        if key not in cache:
            cache[key] = _evaluate(ws, backhaul, xy, metric, False, tol,
                                   fixed_assign=fixed).score
        return cache[key]

    hap_xy, _ = place_haps_localsearch(
        hap_xy, objective, cfg.placement_step_schedule, _area_bounds(scenario))
    ev = _evaluate(ws, backhaul, hap_xy, metric, False, tol, fixed_assign=fixed)
    return _build_solution(ws, ev, backhaul, hap_xy, metric, 1, SolverTag.BENCH2,
                           (ev.score[1],))


SOLVERS = {
    SolverTag.APPROX: solve_approx,
    SolverTag.LOW_COMPLEXITY: solve_lowcomplexity,
    SolverTag.BENCH1: solve_benchmark1,
    SolverTag.BENCH2: solve_benchmark2,
}
