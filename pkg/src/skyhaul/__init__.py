"""Deterministic simulator and optimizer for a satellite/HAP/terrestrial downlink.

Jointly chooses access and backhaul associations, HAP placement, and
transmit powers to maximize a ground-user rate utility under bandwidth,
peak-power, QoS, and relay-battery constraints. See the README for the
CLI and configuration reference.
"""

from ._kernels import backend_name
from .assoc import (AccessAssignment, BackhaulAssignment, access_associate_greedy,
                    backhaul_associate, effective_user_rate, random_associate)
from .channel import (ChannelParams, FsoLinkParams, LinkBudget, LinkClass,
                      RfLinkParams, backhaul_chain_rate, fso_rate, rf_pathloss_db,
                      rf_rate)
from .energy import (EnergyParams, HarvestProfile, harvest, max_feasible_energy,
                     step_battery)
from .errors import (ChainStructureError, DomainError, InfeasibleError,
                     ScenarioValidationError, SkyhaulError)
from .harness import (ExperimentSpec, ResultRow, emit_csv, run_hap_power_sweep,
                      run_users_sweep)
from .model import (BatteryState, Box, Gateway, Position3D, Scenario, ScenarioConfig,
                    Station, StationKind, User, UtilityMetric, generate_scenario,
                    utility, validate_scenario)
from .optimize import (Solution, SolverConfig, SolverTag, align_fso,
                       allocate_power_maxmin, allocate_power_uniform,
                       allocate_power_waterfill, misalignment,
                       place_haps_localsearch, place_haps_weighted_centroid,
                       solve_approx, solve_benchmark1, solve_benchmark2,
                       solve_lowcomplexity)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
