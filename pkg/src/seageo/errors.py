"""Exception types shared across the package."""

from __future__ import annotations


class SeageoError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SeageoError, ValueError):
    """An input value is outside its documented domain."""


class DegenerateGeometryError(SeageoError):
    """A point configuration does not determine the requested transform."""

    def __init__(self, message: str, condition_estimate: float | None = None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class PointAtInfinityError(SeageoError):
    """A pixel maps to (or from) the plane's line at infinity (the horizon)."""


class TimeOrderError(SeageoError):
    """Timestamps were not presented in the required order."""


class FilterDegeneracyError(SeageoError):
    """A filter covariance or innovation matrix lost positive definiteness."""


class CoverageError(SeageoError):
    """A timestamp falls outside the span of the data meant to cover it."""


class GenerationError(SeageoError):
    """A synthetic scenario is not realizable as configured."""


class EmptyOverlapError(SeageoError):
    """Evaluation found no ground-truth samples inside the trajectory span."""


class ParseError(SeageoError):
    """A data file violates its schema.  Carries the offending location."""

    def __init__(self, path: str, line: int | None, message: str):
        self.path = path
        self.line = line
        loc = f"{path}:{line}" if line is not None else path
        super().__init__(f"{loc}: {message}")


class RangeWarning(UserWarning):
    """Input is outside the recommended operating envelope; result still returned."""
