"""Experiment sweeps, CSV emission, and paired-benchmark reporting.

Two experiment kinds: `users` sweeps the user count and reports the
average per-user rate; `happower` sweeps HAP peak power crossed with the
backhaul bandwidth B0 and reports the average rate of HAP-served users.
Rows are deterministic functions of (config, seed); wall-clock times are
measured but written as 0 unless timing is explicitly enabled, so default
CSV output is byte-identical across reruns. Solver failures become
rows with NaN utility fields instead of aborting the sweep.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

from .config import AppConfig
from .channel import ChannelParams
from .energy import EnergyParams
from .errors import ScenarioValidationError, SkyhaulError
from .model import Scenario, ScenarioConfig, StationKind, generate_scenario
from .optimize import SOLVERS, SolverConfig, SolverTag, Solution

CSV_HEADER = ("experiment,sweep_value,b0_hz,seed,solver,utility,avg_rate_bps,"
              "unserved,iterations,wall_ms")

USERS_SWEEP = "users"
HAP_POWER_SWEEP = "happower"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    sweep_values: tuple[float, ...]
    seeds: tuple[int, ...]
    solvers: tuple[SolverTag, ...]
    scenario: ScenarioConfig = ScenarioConfig()
    solver_config: SolverConfig = SolverConfig()
    channel: ChannelParams = ChannelParams()
    energy: EnergyParams = EnergyParams()
    b0_values: tuple[float, ...] = ()

    def __post_init__(self):
        problems = []
        if self.kind not in (USERS_SWEEP, HAP_POWER_SWEEP):
            problems.append(f"unknown experiment kind {self.kind!r}")
        if not self.sweep_values:
            problems.append("sweep_values must be non-empty")
        elif any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
            problems.append("sweep_values must be strictly increasing")
        if not self.seeds:
            problems.append("seeds must be non-empty")
        if not self.solvers:
            problems.append("solvers must be non-empty")
        if self.kind == HAP_POWER_SWEEP and not self.b0_values:
            problems.append("happower experiment needs b0_values")
        if problems:
            raise ScenarioValidationError(problems)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    sweep_value: float
    b0_hz: float
    seed: int
    solver: str
    utility: float
    avg_rate_bps: float
    unserved: int
    iterations: int
    wall_ms: float
    error: str = ""  # in-process marker; not serialized (NaN fields flag it)


def spec_from_config(app: AppConfig, kind: str | None = None,
                     seeds: tuple[int, ...] | None = None,
                     solvers: tuple[SolverTag, ...] | None = None) -> ExperimentSpec:
    exp = app.experiment
    return ExperimentSpec(
        kind=kind or exp.kind,
        sweep_values=tuple(exp.sweep_values),
        seeds=tuple(seeds if seeds is not None else exp.seeds),
        solvers=tuple(solvers if solvers is not None else exp.solvers),
        scenario=app.scenario,
        solver_config=app.solver,
        channel=app.channel,
        energy=app.energy,
        b0_values=tuple(exp.b0_values),
    )


def _hap_user_mean_rate(solution: Solution, scenario: Scenario) -> float:
    hap_ids = {s.id for s in scenario.stations_of(StationKind.HAP)}
    rates = [solution.per_user_rate[uid]
             for uid, sid in solution.access.user_to_station.items()
             if sid in hap_ids]
    return sum(rates) / len(rates) if rates else 0.0


def _run_one(spec: ExperimentSpec, scenario: Scenario, tag: SolverTag,
             sweep_value: float, b0: float) -> ResultRow:
    n_users = scenario.config.user_count
    t0 = time.perf_counter()
    try:
        sol = SOLVERS[tag](scenario, spec.solver_config, None, spec.channel,
                           spec.energy)
    except SkyhaulError as exc:
        wall = (time.perf_counter() - t0) * 1e3
        return ResultRow(spec.kind, float(sweep_value), float(b0), scenario.config.seed,
                         tag.value, math.nan, math.nan, n_users, 0, wall, str(exc))
    wall = (time.perf_counter() - t0) * 1e3
    if spec.kind == HAP_POWER_SWEEP:
        avg = _hap_user_mean_rate(sol, scenario)
    else:
        avg = sum(sol.per_user_rate.values()) / n_users if n_users else 0.0
    unserved = n_users - sol.access.served_count()
    return ResultRow(spec.kind, float(sweep_value), float(b0), scenario.config.seed,
                     tag.value, sol.utility_value, avg, unserved, sol.iterations, wall)


def run_users_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """One row per (user count, seed, solver), in that order."""
    if spec.kind != USERS_SWEEP:
        raise ScenarioValidationError(f"expected a {USERS_SWEEP} spec, got {spec.kind}")
    rows = []
    for value in spec.sweep_values:
        for seed in spec.seeds:
            cfg = replace(spec.scenario, user_count=int(value), seed=seed)
            scenario = generate_scenario(cfg)
            for tag in spec.solvers:
                rows.append(_run_one(spec, scenario, tag, value,
                                     cfg.backhaul_bandwidth_hz))
    return rows


def run_hap_power_sweep(spec: ExperimentSpec,
                        b0_values: tuple[float, ...] | None = None) -> list[ResultRow]:
    """Rows over (hap peak power, B0, seed, solver); rates cover HAP users only."""
    if spec.kind != HAP_POWER_SWEEP:
        raise ScenarioValidationError(
            f"expected a {HAP_POWER_SWEEP} spec, got {spec.kind}")
    b0s = tuple(b0_values if b0_values is not None else spec.b0_values)
    if not b0s:
        raise ScenarioValidationError("happower sweep needs at least one B0 value")
    rows = []
    for power in spec.sweep_values:
        for b0 in b0s:
            for seed in spec.seeds:
                cfg = replace(spec.scenario, hap_peak_power_w=float(power),
                              backhaul_bandwidth_hz=float(b0), seed=seed)
                scenario = generate_scenario(cfg)
                for tag in spec.solvers:
                    rows.append(_run_one(spec, scenario, tag, power, b0))
    return rows


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    if spec.kind == USERS_SWEEP:
        return run_users_sweep(spec)
    return run_hap_power_sweep(spec)


def _fmt(value: float) -> str:
    return repr(float(value))


def emit_csv(rows, path: str, include_timing: bool = False) -> None:
    """Write rows in the documented fixed column order, UTF-8, LF newlines.

    wall_ms is written as 0.0 unless `include_timing` is set, keeping
    default output byte-identical for identical (config, seed) runs.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in rows:
                wall = r.wall_ms if include_timing else 0.0
                fh.write(",".join([
                    r.experiment, _fmt(r.sweep_value), _fmt(r.b0_hz), str(r.seed),
                    r.solver, _fmt(r.utility), _fmt(r.avg_rate_bps), str(r.unserved),
                    str(r.iterations), _fmt(wall),
                ]) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path: str) -> list[ResultRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ScenarioValidationError(f"unexpected CSV header in {path}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append(ResultRow(
                experiment=parts[0], sweep_value=float(parts[1]), b0_hz=float(parts[2]),
                seed=int(parts[3]), solver=parts[4], utility=float(parts[5]),
                avg_rate_bps=float(parts[6]), unserved=int(parts[7]),
                iterations=int(parts[8]), wall_ms=float(parts[9])))
    return rows


def summarize(rows) -> dict:
    """Nested means/stddevs: {sweep_value: {solver: (mean, std, n)}} over avg rate.

    NaN rows (failed solves) are excluded from the statistics.
    """
    grouped: dict[float, dict[str, list[float]]] = {}
    for r in rows:
        if math.isnan(r.avg_rate_bps):
            continue
        grouped.setdefault(r.sweep_value, {}).setdefault(r.solver, []).append(
            r.avg_rate_bps)
    out: dict[float, dict[str, tuple[float, float, int]]] = {}
    for value, per_solver in sorted(grouped.items()):
        out[value] = {}
        for solver, vals in sorted(per_solver.items()):
            n = len(vals)
            mean = sum(vals) / n
            var = sum((v - mean) ** 2 for v in vals) / n
            out[value][solver] = (mean, math.sqrt(var), n)
    return out


def report_text(rows) -> str:
    """Per-solver mean +/- stddev table and pairwise percentage gains."""
    stats = summarize(rows)
    lines = []
    lines.append(f"{'sweep_value':>12}  {'solver':<14}{'mean_avg_rate_bps':>18}"
                 f"{'stddev':>14}  {'runs':>5}")
    for value, per_solver in stats.items():
        for solver, (mean, std, n) in per_solver.items():
            lines.append(f"{value:>12g}  {solver:<14}{mean:>18.6g}{std:>14.6g}  {n:>5d}")
    lines.append("")
    lines.append("pairwise mean gains ((a - b) / b):")
    for value, per_solver in stats.items():
        solvers = list(per_solver)
        for a in solvers:
            for b in solvers:
                if a == b or per_solver[b][0] == 0.0:
                    continue
                gain = (per_solver[a][0] - per_solver[b][0]) / per_solver[b][0] * 100.0
                lines.append(f"sweep_value={value:g}: {a} vs {b}: {gain:+.3f}%")
    return "\n".join(lines) + "\n"
