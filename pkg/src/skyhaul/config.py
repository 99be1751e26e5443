"""Plain-text configuration files: `section.key = value`, UTF-8, `#` comments.

Sections are `scenario`, `channel`, `energy`, `solver`, and `experiment`;
every key is listed in the tables below and documented in the README. All
keys are optional and default to the built-in values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .channel import ChannelParams, FsoLinkParams, RfLinkParams
from .energy import EnergyParams, HarvestProfile
from .errors import ScenarioValidationError
from .model import Box, ScenarioConfig, UtilityMetric
from .optimize import SolverConfig, SolverTag

_METRICS = {m.value: m for m in UtilityMetric}
_SOLVERS = {t.value: t for t in SolverTag}


@dataclass(frozen=True)
class ExperimentSettings:
    kind: str = "users"  # "users" | "happower"
    sweep_values: tuple[float, ...] = (50, 100, 150, 200, 250, 300, 350, 400)
    b0_values: tuple[float, ...] = (20e6, 50e6, 100e6)
    seeds: tuple[int, ...] = tuple(range(20))
    solvers: tuple[SolverTag, ...] = (SolverTag.APPROX, SolverTag.LOW_COMPLEXITY,
                                      SolverTag.BENCH1, SolverTag.BENCH2)


@dataclass(frozen=True)
class AppConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    channel: ChannelParams = ChannelParams()
    energy: EnergyParams = EnergyParams()
    solver: SolverConfig = SolverConfig()
    experiment: ExperimentSettings = ExperimentSettings()


def _to_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("true", "yes", "1", "on"):
        return True
    if s in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _to_floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(","))


def _to_ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(","))


def _to_box(v: str) -> Box:
    parts = _to_floats(v)
    if len(parts) != 4:
        raise ValueError("box needs x_min,x_max,y_min,y_max")
    return Box(*parts)


def _to_metric(v: str) -> UtilityMetric:
    key = v.strip().lower()
    if key not in _METRICS:
        raise ValueError(f"unknown utility metric {v!r}; one of {sorted(_METRICS)}")
    return _METRICS[key]


def _to_solvers(v: str) -> tuple[SolverTag, ...]:
    tags = []
    for name in v.split(","):
        key = name.strip().lower()
        if key not in _SOLVERS:
            raise ValueError(f"unknown solver {name!r}; one of {sorted(_SOLVERS)}")
        tags.append(_SOLVERS[key])
    return tuple(tags)


def _to_user_split(v: str) -> tuple[float, float, float]:
    parts = _to_floats(v)
    if len(parts) != 3:
        raise ValueError("user_split needs three fractions")
    return parts  # type: ignore[return-value]


def _noise_dbm_hz(v: str) -> float:
    return 10.0 ** (float(v) / 10.0) * 1e-3


# key -> (field name on the target dataclass, converter)
_SCENARIO_KEYS = {
    "area_side_km": ("area_side_km", float),
    "subarea1_box": ("subarea1_box", _to_box),
    "subarea2_box": ("subarea2_box", _to_box),
    "user_count": ("user_count", int),
    "user_split": ("user_split", _to_user_split),
    "terrestrial_count": ("terrestrial_count", int),
    "relay_count": ("relay_count", int),
    "hap_count": ("hap_count", int),
    "gateway_count": ("gateway_count", int),
    "hap_altitude_km": ("hap_altitude_km", float),
    "hap_peak_power_w": ("hap_peak_power_w", float),
    "backhaul_bandwidth_hz": ("backhaul_bandwidth_hz", float),
    "utility_metric": ("utility_metric", _to_metric),
    "seed": ("seed", int),
    "time_slots": ("time_slots", int),
    "terrestrial_peak_power_w": ("terrestrial_peak_power_w", float),
    "relay_peak_power_w": ("relay_peak_power_w", float),
    "satellite_peak_power_w": ("satellite_peak_power_w", float),
    "satellite_altitude_km": ("satellite_altitude_km", float),
    "terrestrial_access_bandwidth_hz": ("terrestrial_access_bandwidth_hz", float),
    "relay_access_bandwidth_hz": ("relay_access_bandwidth_hz", float),
    "hap_access_bandwidth_hz": ("hap_access_bandwidth_hz", float),
    "user_bandwidth_hz": ("user_bandwidth_hz", float),
    "qos_min_rate_bps": ("qos_min_rate_bps", float),
    "n_max_haps_per_parent": ("n_max_haps_per_parent", int),
    "relay_battery_capacity_j": ("relay_battery_capacity_j", float),
    "relay_battery_initial_fraction": ("relay_battery_initial_fraction", float),
}

_RF_KEYS = {
    "access_carrier_hz": ("carrier_hz", float),
    "backhaul_carrier_hz": ("backhaul_carrier_hz", float),
    "pathloss_exponent_nlos": ("pathloss_exponent_nlos", float),
    "reference_distance_m": ("reference_distance_m", float),
    "noise_density_dbm_hz": ("noise_density_w_hz", _noise_dbm_hz),
    "excess_db_terrestrial_user": ("excess_db_terrestrial_user", float),
    "excess_db_relay_user": ("excess_db_relay_user", float),
    "excess_db_hap_user": ("excess_db_hap_user", float),
    "excess_db_sat_hap": ("excess_db_sat_hap", float),
    "excess_db_rf_backhaul": ("excess_db_rf_backhaul", float),
}

_FSO_KEYS = {
    "fso_optical_bandwidth_hz": ("optical_bandwidth_hz", float),
    "fso_attenuation_per_km": ("attenuation_per_km", float),
    "fso_beam_divergence_rad": ("beam_divergence_rad", float),
    "fso_responsivity_gain": ("responsivity_gain", float),
    "fso_pointing_jitter_rad": ("pointing_jitter_rad", float),
}

_CHANNEL_KEYS = {
    "fso_enabled": ("fso_enabled", _to_bool),
    "backhaul_tx_power_w": ("backhaul_tx_power_w", float),
    "access_snr_floor_db": ("access_snr_floor_db", float),
}

_PROFILE_KEYS = {
    "peak_harvest_j": ("peak_harvest_j", float),
    "sunrise_slot": ("sunrise_slot", int),
    "sunset_slot": ("sunset_slot", int),
    "slots_per_day": ("slots_per_day", int),
}

_ENERGY_KEYS = {
    "operating_power_w": ("operating_power_w", float),
    "slot_duration_s": ("slot_duration_s", float),
}

_SOLVER_KEYS = {
    "max_outer_iterations": ("max_outer_iterations", int),
    "convergence_epsilon": ("convergence_epsilon", float),
    "placement_step_schedule": ("placement_step_schedule", _to_floats),
    "power_bisection_tolerance": ("power_bisection_tolerance", float),
    "pin_load_threshold": ("pin_load_threshold", float),
}

_EXPERIMENT_KEYS = {
    "kind": ("kind", lambda v: v.strip().lower()),
    "sweep_values": ("sweep_values", _to_floats),
    "b0_values": ("b0_values", _to_floats),
    "seeds": ("seeds", _to_ints),
    "solvers": ("solvers", _to_solvers),
}


def parse_config_text(text: str) -> AppConfig:
    """Parse config text; raises ScenarioValidationError on any bad line or key."""
    raw: dict[str, dict[str, str]] = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected 'section.key = value'")
            continue
        name, value = stripped.split("=", 1)
        name = name.strip()
        if "." not in name:
            problems.append(f"line {lineno}: key {name!r} missing its section prefix")
            continue
        section, key = name.split(".", 1)
        raw.setdefault(section.strip(), {})[key.strip()] = value.strip()

    def take(section: str, table: dict) -> dict:
        kwargs = {}
        for key, value in raw.get(section, {}).items():
            if key not in table:
                continue
            field_name, conv = table[key]
            try:
                kwargs[field_name] = conv(value)
            except (ValueError, TypeError) as exc:
                problems.append(f"{section}.{key}: {exc}")
        return kwargs

    known = {
        "scenario": _SCENARIO_KEYS,
        "channel": {**_RF_KEYS, **_FSO_KEYS, **_CHANNEL_KEYS},
        "energy": {**_PROFILE_KEYS, **_ENERGY_KEYS},
        "solver": _SOLVER_KEYS,
        "experiment": _EXPERIMENT_KEYS,
    }
    for section, entries in raw.items():
        if section not in known:
            problems.append(f"unknown section {section!r}")
            continue
        for key in entries:
            if key not in known[section]:
                problems.append(f"unknown key {section}.{key}")

    kwargs = {
        "scenario": take("scenario", _SCENARIO_KEYS),
        "rf": take("channel", _RF_KEYS),
        "fso": take("channel", _FSO_KEYS),
        "chan": take("channel", _CHANNEL_KEYS),
        "profile": take("energy", _PROFILE_KEYS),
        "energy": take("energy", _ENERGY_KEYS),
        "solver": take("solver", _SOLVER_KEYS),
        "experiment": take("experiment", _EXPERIMENT_KEYS),
    }
    if problems:
        raise ScenarioValidationError(problems)

    try:
        scenario = ScenarioConfig(**kwargs["scenario"])
        rf = RfLinkParams(**kwargs["rf"])
        fso = FsoLinkParams(**kwargs["fso"])
        chan = ChannelParams(rf=rf, fso=fso, **kwargs["chan"])
        profile = HarvestProfile(**{"peak_harvest_j": 50e3, **kwargs["profile"]})
        energy = EnergyParams(profile=profile, **kwargs["energy"])
        solver = SolverConfig(**kwargs["solver"])
        experiment = ExperimentSettings(**kwargs["experiment"])
    except ValueError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    if experiment.kind not in ("users", "happower"):
        raise ScenarioValidationError(
            f"experiment.kind must be 'users' or 'happower', got {experiment.kind!r}")
    return AppConfig(scenario=scenario, channel=chan, energy=energy, solver=solver,
                     experiment=experiment)


def load_config(path: str) -> AppConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
