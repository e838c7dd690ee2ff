"""Exception types shared across the package.

Estimation failures are structured: errors that concern a single
age-sex cell carry the cell on the exception so callers can keep the
groups that did work.
"""

from __future__ import annotations


class NetworkSurvivalError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(NetworkSurvivalError):
    """An input file is missing a required column or has a bad header."""


class ValidationError(NetworkSurvivalError):
    """Row-level input problem (bad weight, unknown sex code, ...)."""


class ConfigError(NetworkSurvivalError):
    """Analysis or simulation configuration is inconsistent."""


class EmptyCellError(NetworkSurvivalError):
    """No sampled respondents fall in the requested age-sex cell."""

    def __init__(self, group, message: str | None = None):
        self.group = group
        super().__init__(message or f"no respondents in cell {group}")


class DegenerateVisibilityError(NetworkSurvivalError):
    """Known-population connection total is zero for a cell, so the
    visibility (degree) estimate and everything downstream of it are
    undefined."""

    def __init__(self, group, message: str | None = None):
        self.group = group
        super().__init__(
            message
            or f"zero known-population connections reported in cell {group}"
        )


class DesignError(NetworkSurvivalError):
    """Survey design cannot support the requested operation
    (for example a stratum with a single PSU cannot be resampled)."""


class ScheduleError(NetworkSurvivalError):
    """A rate schedule does not cover the requested age range."""
