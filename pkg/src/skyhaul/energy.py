"""Relay battery dynamics over discrete time slots.

Relays harvest solar energy on a half-sine daylight profile and spend a
fixed operating draw plus transmit energy each slot. Consumption in a slot
may never exceed the energy stored at the end of the previous slot; that
is a hard feasibility constraint, not a clipping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError, InfeasibleError
from .model import BatteryState


@dataclass(frozen=True)
class HarvestProfile:
    peak_harvest_j: float  # joule per slot at solar noon
    sunrise_slot: int = 6
    sunset_slot: int = 18
    slots_per_day: int = 24

    def __post_init__(self):
        if not 0 <= self.sunrise_slot < self.sunset_slot <= self.slots_per_day:
            raise DomainError(
                f"need 0 <= sunrise < sunset <= slots_per_day, got "
                f"{self.sunrise_slot}, {self.sunset_slot}, {self.slots_per_day}")
        if self.peak_harvest_j < 0:
            raise DomainError("peak_harvest_j must be >= 0")


@dataclass(frozen=True)
class EnergyParams:
    """`energy.*` config keys: harvest shape plus relay consumption model."""

    profile: HarvestProfile = HarvestProfile(peak_harvest_j=50e3)
    operating_power_w: float = 2.0
    slot_duration_s: float = 3600.0


def harvest(profile: HarvestProfile, slot: int) -> float:
    """Energy harvested during a slot; zero outside daylight."""
    if slot < 0:
        raise DomainError("slot must be >= 0")
    t = slot % profile.slots_per_day
    if not profile.sunrise_slot <= t <= profile.sunset_slot:
        return 0.0
    phase = (t - profile.sunrise_slot) / (profile.sunset_slot - profile.sunrise_slot)
    return profile.peak_harvest_j * max(0.0, math.sin(math.pi * phase))


def step_battery(state: BatteryState, harvested: float, consumed: float) -> BatteryState:
    """Advance one slot: subtract consumption, add harvest, clip at capacity.

    Raises InfeasibleError when `consumed` exceeds the stored energy of the
    previous slot.
    """
    if harvested < 0 or consumed < 0:
        raise DomainError("harvested and consumed energy must be >= 0")
    if consumed > state.stored:
        raise InfeasibleError(
            f"slot {state.slot_index}: consuming {consumed} J exceeds stored "
            f"{state.stored} J")
    new_stored = min(state.capacity, state.stored - consumed + harvested)
    return BatteryState(capacity=state.capacity, stored=new_stored,
                        slot_index=state.slot_index + 1)


def max_feasible_energy(state: BatteryState, operating_energy: float) -> float:
    """Transmission-energy budget for the current slot after operating draw."""
    if operating_energy < 0:
        raise DomainError("operating_energy must be >= 0")
    return max(0.0, state.stored - operating_energy)


def simulate_trace(initial: BatteryState, params: EnergyParams, tx_power_w: float,
                   slots: int) -> list[BatteryState]:
    """Battery states at the end of each of `slots` slots at constant tx power.

    Raises InfeasibleError the moment a slot's consumption cannot be met.
    """
    state = initial
    trace = []
    consumed = (params.operating_power_w + tx_power_w) * params.slot_duration_s
    for t in range(slots):
        h = harvest(params.profile, initial.slot_index + t)
        state = step_battery(state, h, consumed)
        trace.append(state)
    return trace


def sustainable_tx_power(initial: BatteryState, params: EnergyParams, peak_power_w: float,
                         slots: int, tol_w: float = 1e-6) -> float:
    """Largest constant transmit power feasible at every one of `slots` slots.

    Bisection on power; returns 0 when even idling (tx = 0) is infeasible
    somewhere in the horizon, so callers can park the relay.
    """

    def feasible(p: float) -> bool:
        state = initial
        consumed = (params.operating_power_w + p) * params.slot_duration_s
        for t in range(slots):
            if consumed > state.stored:
                return False
            h = harvest(params.profile, initial.slot_index + t)
            state = replace(state, stored=min(state.capacity, state.stored - consumed + h),
                            slot_index=state.slot_index + 1)
        return True

    if peak_power_w <= 0:
        return 0.0
    if feasible(peak_power_w):
        return peak_power_w
    if not feasible(0.0):
        return 0.0
    lo, hi = 0.0, peak_power_w
    while hi - lo > tol_w:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo
