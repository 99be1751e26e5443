"""Exception types shared across the package."""


class SkyhaulError(Exception):
    """Base class for all package errors."""


class DomainError(SkyhaulError, ValueError):
    """An input is outside the mathematical domain of an operation."""


class ScenarioValidationError(SkyhaulError, ValueError):
    """A scenario or configuration violates a structural invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleError(SkyhaulError):
    """A hard feasibility constraint (battery, parent capacity) cannot be met."""


class ChainStructureError(SkyhaulError):
    """A backhaul chain references a node with no assignment."""
