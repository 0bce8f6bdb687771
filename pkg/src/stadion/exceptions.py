"""Custom exception hierarchy for the Stadion toolkit.

Provides structured error handling that maps onto the command-line exit
codes.  Exceptions are raised by the library modules and caught at the CLI
boundary, where they are logged and converted to structured error dicts and
the documented process exit status.

Exception Hierarchy:
    StadionError (base, exit 4)
    +-- ConfigurationError (exit 2)
    +-- DataError (exit 3)
    |   +-- ParseError (malformed CSV cell, ragged row)
    +-- ComputationError (exit 4)
        +-- ExtensionNotSupportedError (no extension operator for the model)
"""

from __future__ import annotations

from typing import Any


class StadionError(Exception):
    """Base exception for all Stadion errors.

    All custom exceptions in this module inherit from this class, allowing
    callers to catch any toolkit error with a single except clause.

    Attributes:
        message: Human-readable error description.
        error_code: Machine-readable error code string.
        details: Additional context about the error (optional).
        exit_code: Process exit status used by the CLI for this error family.
    """

    exit_code: int = 4

    def __init__(
        self,
        message: str = "Stadion error",
        error_code: str = "STADION_ERROR",
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details: dict[str, Any] = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Convert the exception to a structured error dict.

        Returns a dict with the error message, error_code, exit_code and
        optionally details.
        """
        result: dict[str, Any] = {
            "error": self.message,
            "error_code": self.error_code,
            "exit_code": self.exit_code,
        }
        if self.details:
            result["details"] = self.details
        return result


class ConfigurationError(StadionError):
    """Raised when run parameters or configuration files are invalid.

    Covers unknown measure or index names, out-of-range parameters, malformed
    run files and preconditions such as calibrating with fewer than two
    candidate K values.
    """

    exit_code = 2

    def __init__(
        self,
        message: str = "Invalid configuration",
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(
            message=message,
            error_code="CONFIGURATION_ERROR",
            details=details,
        )


class DataError(StadionError):
    """Raised when input data cannot be used.

    Missing files, empty files, non-finite values, mismatched partition
    lengths, a label column out of range or a K larger than the data allows.
    """

    exit_code = 3

    def __init__(
        self,
        message: str = "Invalid data",
        error_code: str = "DATA_ERROR",
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(
            message=message,
            error_code=error_code,
            details=details,
        )


class ParseError(DataError):
    """Raised when a CSV cell or row cannot be parsed.

    The ``details`` dict carries the 1-based ``row`` and, when known, the
    0-based ``column`` of the offending cell.
    """

    def __init__(
        self,
        message: str = "Parse error",
        row: int | None = None,
        column: int | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        merged: dict[str, Any] = dict(details or {})
        if row is not None:
            merged["row"] = row
        if column is not None:
            merged["column"] = column
        super().__init__(
            message=message,
            error_code="PARSE_ERROR",
            details=merged,
        )
        self.row = row
        self.column = column


class ComputationError(StadionError):
    """Raised for failures while fitting, perturbing or scoring.

    Covers size caps being exceeded, empty reference clusters and other
    runtime conditions that are not the caller's data or configuration.
    """

    exit_code = 4

    def __init__(
        self,
        message: str = "Computation failed",
        error_code: str = "COMPUTATION_ERROR",
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(
            message=message,
            error_code=error_code,
            details=details,
        )


class ExtensionNotSupportedError(ComputationError):
    """Raised when new points must be assigned by a model without an extension operator.

    Ward linkage has no natural rule for placing unseen points, so the
    extended stability variant is only available for center-based models.
    """

    def __init__(
        self,
        message: str = "Model has no extension operator",
        details: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(
            message=message,
            error_code="EXTENSION_NOT_SUPPORTED",
            details=details,
        )
