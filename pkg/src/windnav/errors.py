"""Exception and warning types shared across the toolkit."""

from __future__ import annotations

import numpy as np


class NavToolkitError(Exception):
    """Base class for all toolkit errors."""


class UndefinedInputError(NavToolkitError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. v = 0)."""


class WindTooStrongError(NavToolkitError):
    """Wind speed reached or exceeded unit norm at an evaluated point."""


class SingularMetricError(NavToolkitError):
    """Metric matrix is not invertible (or not positive-definite) at a point."""


class DomainExitError(NavToolkitError):
    """An integration left the region where the fields can be evaluated."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)


class NotHomothetyError(NavToolkitError):
    """The wind is not an infinitesimal homothety of the metric.

    Carries diagnostics for the worst sample point so that callers can
    report why the moving-frame construction does not apply.
    """

    def __init__(self, message: str, worst_point=None, deviation=None,
                 spread=None, estimates=None):
        super().__init__(message)
        self.worst_point = None if worst_point is None else np.asarray(worst_point, float)
        self.deviation = deviation
        self.spread = spread
        self.estimates = estimates


class InvalidRandersError(NavToolkitError):
    """One-form too large for a Randers structure (alpha-norm of beta >= 1)."""


class InvalidTrajectoryError(NavToolkitError, ValueError):
    """Trajectory violates a precondition (wrong tag, wrong speed profile, ...)."""


class NoInterceptionError(NavToolkitError):
    """Shooting failed to intercept the moving target within the horizon."""


class InfeasibleError(NavToolkitError):
    """Goal unreachable by the schedule search within the time horizon."""


class NonConvergenceError(NavToolkitError):
    """Fixed-point iteration did not converge.  Carries the last iterate."""

    def __init__(self, message: str, last_time=None, history=None):
        super().__init__(message)
        self.last_time = last_time
        self.history = history


class ScenarioError(NavToolkitError):
    """Scenario file failed to parse or validate."""

    def __init__(self, message: str, path=None, line=None, field=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        prefix = " (".join([", ".join(loc)]) if loc else ""
        full = f"{message} [{', '.join(loc)}]" if loc else message
        super().__init__(full)
        self.path = path
        self.line = line
        self.field = field


class BranchAmbiguityWarning(UserWarning):
    """A unitary logarithm has an eigenvalue at (or next to) the branch cut."""
