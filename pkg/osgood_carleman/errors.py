"""Exceptions raised by the verification modules.

Every error carries a short machine-readable ``reason`` slug
(``"bad_axis:3"``, ``"beyond_nyquist:j=9"``) next to the human message, so
reports and the CLI can record why something was refused without parsing
prose.
"""
from __future__ import annotations

from typing import Any


class VerificationError(Exception):
    """Base class for every error raised by osgood_carleman."""

    def __init__(self, message: str, reason: str = "error", **details: Any) -> None:
        super().__init__(message)
        self.reason = reason
        self.details = details


class ConfigurationError(VerificationError, ValueError):
    """Size, axis or grid mismatch, or an invalid configuration key."""


class DomainError(VerificationError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class TableRangeError(DomainError):
    """Query beyond the tabulated range of the weight; raise ``t_max``."""


class ResolutionError(VerificationError):
    """A dyadic block does not fit below the grid's Nyquist frequency."""

    def __init__(self, message: str, reason: str = "beyond_nyquist", required_points: int = 0) -> None:
        super().__init__(message, reason, required_points=required_points)
        self.required_points = required_points


class UndefinedRatioError(VerificationError):
    """A ratio was requested on a vanishing block."""


class PreconditionError(VerificationError):
    """Input violates a structural assumption (ellipticity, realness, ...)."""


class SupportError(VerificationError):
    """A test function fails its support certificate."""


class SearchFailure(VerificationError):
    """A bounded parameter search found no admissible value."""


class FitFailure(VerificationError):
    """An empirical constant could not be fitted."""


class ConditionViolation(VerificationError):
    """A counterexample side condition failed; ``table`` holds the witnesses."""

    def __init__(self, message: str, reason: str = "condition_violation", table: Any = None) -> None:
        super().__init__(message, reason)
        self.table = table
