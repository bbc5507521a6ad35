"""
SocSec Exception Classes

This module defines the exception hierarchy for the socsec analysis package.
All custom exceptions inherit from SocSecError.

Exception Hierarchy:
    SocSecError (base)
    ├── GeometryError - Invalid regions or protected-zone layouts
    ├── DomainError - Arguments outside a function's domain
    ├── NonConvergentError - Quadrature or series failed to converge
    ├── DegenerateFitError - Moment pair cannot define a Gamma law
    ├── ConfigError - Experiment or scenario configuration errors
    └── SimulationError - Monte Carlo execution failures

TruncationWarning is a UserWarning emitted when a truncated sum still
carries a non-negligible tail.
"""
from __future__ import annotations

from typing import Any


class SocSecError(Exception):
    """
    Base exception class for all socsec errors.

    Attributes:
        message: Human-readable error description
        error_code: Optional error code for programmatic handling
        details: Optional dictionary with additional error context
    """

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self) -> str:
        if self.error_code:
            return f"[{self.error_code}] {self.message}"
        return self.message

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}("
            f"message={self.message!r}, "
            f"error_code={self.error_code!r}, "
            f"details={self.details!r})"
        )

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to dictionary for serialization."""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "details": self.details,
        }


class GeometryError(SocSecError):
    """
    Raised when a region or layout violates its geometric preconditions.

    Examples:
        - Protected zone touching the relay disk or the outer boundary
        - Inner radius not below outer radius
        - Pole inside the relay disk for a relay-moment integral
    """

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        region: str | None = None,
    ) -> None:
        details = details or {}
        if region:
            details["region"] = region
        super().__init__(message, error_code, details)
        self.region = region


class DomainError(SocSecError, ValueError):
    """Raised for arguments outside the domain of a special function."""

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        function: str | None = None,
    ) -> None:
        details = details or {}
        if function:
            details["function"] = function
        super().__init__(message, error_code, details)
        self.function = function


class NonConvergentError(SocSecError, ArithmeticError):
    """
    Raised when a quadrature rule or series fails to converge.

    The details carry the last estimate and the iteration count reached so
    that callers (the CLI in particular) can name the offending grid point.
    """

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        iterations: int | None = None,
        last_estimate: float | None = None,
    ) -> None:
        details = details or {}
        if iterations is not None:
            details["iterations"] = iterations
        if last_estimate is not None:
            details["last_estimate"] = last_estimate
        super().__init__(message, error_code, details)
        self.iterations = iterations
        self.last_estimate = last_estimate


class DegenerateFitError(SocSecError):
    """Raised when a moment pair has nonpositive mean or variance."""

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        mean: float | None = None,
        variance: float | None = None,
    ) -> None:
        details = details or {}
        if mean is not None:
            details["mean"] = mean
        if variance is not None:
            details["variance"] = variance
        super().__init__(message, error_code, details)
        self.mean = mean
        self.variance = variance


class ConfigError(SocSecError, ValueError):
    """
    Raised for invalid experiment configuration.

    Examples:
        - Unknown preset name
        - Empty sweep grid or unknown sweep variable
        - Unparseable power value
    """

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        field_name: str | None = None,
        file_path: str | None = None,
    ) -> None:
        details = details or {}
        if field_name:
            details["field"] = field_name
        if file_path:
            details["file_path"] = file_path
        super().__init__(message, error_code, details)
        self.field_name = field_name
        self.file_path = file_path


class SimulationError(SocSecError):
    """Raised when a Monte Carlo chunk fails inside a worker process."""

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        details: dict[str, Any] | None = None,
        chunk_index: int | None = None,
    ) -> None:
        details = details or {}
        if chunk_index is not None:
            details["chunk_index"] = chunk_index
        super().__init__(message, error_code, details)
        self.chunk_index = chunk_index


class TruncationWarning(UserWarning):
    """Emitted when the last kept term of a truncated sum is not negligible."""


class ErrorCodes:
    """Standard error codes for socsec exceptions."""

    # Geometry errors (E1xxx)
    REGION_INVALID = "E1001"
    PROTECTED_ZONE_OVERLAP = "E1002"
    POLE_INSIDE_REGION = "E1003"

    # Special function errors (E2xxx)
    SPECFUN_DOMAIN = "E2001"
    SERIES_NOT_CONVERGED = "E2002"

    # Fitting errors (E3xxx)
    DEGENERATE_MOMENTS = "E3001"
    NO_RELAYS = "E3002"

    # Outage / quadrature errors (E4xxx)
    QUADRATURE_NOT_CONVERGED = "E4001"
    DIVERGENT_INTEGRAL = "E4002"

    # Simulation errors (E5xxx)
    WORKER_FAILED = "E5001"
    INVALID_PLAN = "E5002"

    # Configuration errors (E6xxx)
    CONFIG_INVALID = "E6001"
    PRESET_NOT_FOUND = "E6002"
    CONFIG_FILE_NOT_FOUND = "E6003"
    POWER_UNPARSEABLE = "E6004"


__all__ = [
    "SocSecError",
    "GeometryError",
    "DomainError",
    "NonConvergentError",
    "DegenerateFitError",
    "ConfigError",
    "SimulationError",
    "TruncationWarning",
    "ErrorCodes",
]
