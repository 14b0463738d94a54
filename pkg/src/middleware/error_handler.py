"""
Error handling for kv-string-lab.

This module provides the exception hierarchy raised by the numerical modules and
the CLI, and the central handler that turns any exception into a structured
payload and a process exit status.
"""

import logging
import traceback
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2
EXIT_ACCEPTANCE = 3


class ErrorCode(str, Enum):
    """Enumeration of all possible error codes."""

    # Input errors
    INVALID_INPUT = "INVALID_INPUT"
    INVALID_CONFIG = "INVALID_CONFIG"
    USAGE_ERROR = "USAGE_ERROR"
    RESOLUTION_CAP_EXCEEDED = "RESOLUTION_CAP_EXCEEDED"
    WINDOW_TOO_SMALL = "WINDOW_TOO_SMALL"

    # Numerical errors
    SINGULAR_SYSTEM = "SINGULAR_SYSTEM"
    SOLVER_BREAKDOWN = "SOLVER_BREAKDOWN"
    NOT_CONVERGED = "NOT_CONVERGED"
    BRANCH_AMBIGUITY = "BRANCH_AMBIGUITY"

    # Run errors
    ARTIFACT_IO = "ARTIFACT_IO"
    ACCEPTANCE_FAILED = "ACCEPTANCE_FAILED"
    INTERNAL_ERROR = "INTERNAL_ERROR"


class LabError(Exception):
    """Base exception class for all kv-string-lab errors."""

    def __init__(
        self,
        code: ErrorCode,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        exit_status: int = EXIT_COMPUTATION,
    ):
        self.code = code
        self.message = message
        self.details = details or {}
        self.exit_status = exit_status
        self.timestamp = datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary format."""
        return {
            "error": {
                "code": self.code.value,
                "message": self.message,
                "details": self.details,
                "timestamp": self.timestamp,
            }
        }


class InvalidInputError(LabError, ValueError):
    """Raised when an operation receives an argument outside its domain."""

    def __init__(self, parameter_name: str, reason: str):
        super().__init__(
            code=ErrorCode.INVALID_INPUT,
            message=f"Invalid parameter '{parameter_name}': {reason}",
            details={"parameter_name": parameter_name, "reason": reason},
        )
        self.parameter_name = parameter_name
        self.reason = reason


class InvalidConfigError(LabError, ValueError):
    """Raised when a run configuration violates one or more invariants."""

    def __init__(self, errors: List[str]):
        super().__init__(
            code=ErrorCode.INVALID_CONFIG,
            message="; ".join(errors),
            details={"errors": list(errors)},
            exit_status=EXIT_USAGE,
        )
        self.errors = list(errors)


class UsageError(LabError):
    """Raised for malformed command lines."""

    def __init__(self, message: str):
        super().__init__(code=ErrorCode.USAGE_ERROR, message=message, exit_status=EXIT_USAGE)


class ResolutionCapError(LabError, ValueError):
    """Raised when a frequency beyond what the mesh resolves is requested."""

    def __init__(self, omega_max: float, omega_cap: float):
        super().__init__(
            code=ErrorCode.RESOLUTION_CAP_EXCEEDED,
            message=f"omega_max={omega_max:g} exceeds the resolution cap omega_cap={omega_cap:g}",
            details={"omega_max": omega_max, "omega_cap": omega_cap},
        )
        self.omega_cap = omega_cap


class WindowTooSmallError(LabError, ValueError):
    """Raised when a fit window holds too few usable samples."""

    def __init__(self, window: Tuple[float, float], found: int, required: int, reason: str = ""):
        text = f"fit window [{window[0]:g}, {window[1]:g}] has {found} usable samples, need {required}"
        super().__init__(
            code=ErrorCode.WINDOW_TOO_SMALL,
            message=text + (f" ({reason})" if reason else ""),
            details={"window": list(window), "found": found, "required": required},
        )


class EnergyFloorError(WindowTooSmallError):
    """Raised when energies inside a fit window fall to the round-off floor."""

    def __init__(self, window: Tuple[float, float], above_floor: int, floor_time: float):
        LabError.__init__(
            self,
            code=ErrorCode.WINDOW_TOO_SMALL,
            message=(
                f"fit window [{window[0]:g}, {window[1]:g}] reaches the round-off floor at "
                f"t={floor_time:g}; {above_floor} samples lie above it"
            ),
            details={"window": list(window), "above_floor": above_floor, "floor_time": floor_time},
        )


class SingularSystemError(LabError):
    """Raised when a shifted system iw - A is numerically singular."""

    def __init__(self, omega: float, reason: str = "singular Schur complement"):
        super().__init__(
            code=ErrorCode.SINGULAR_SYSTEM,
            message=f"i*omega is a discrete eigenvalue at omega={omega:g}: {reason}",
            details={"omega": omega, "reason": reason},
        )


class SolverBreakdownError(LabError):
    """Raised when a factorization that should succeed does not."""

    def __init__(self, operation: str, reason: str):
        super().__init__(
            code=ErrorCode.SOLVER_BREAKDOWN,
            message=f"Solver breakdown in {operation}: {reason}",
            details={"operation": operation, "reason": reason},
        )


class ConvergenceError(LabError):
    """Raised when an iteration does not converge."""

    def __init__(
        self,
        operation: str,
        iterations: int,
        last_estimate: Optional[float] = None,
        shift: Optional[complex] = None,
    ):
        message = f"{operation} did not converge after {iterations} iterations"
        if shift is not None:
            message += f" (shift={shift})"
        super().__init__(
            code=ErrorCode.NOT_CONVERGED,
            message=message,
            details={
                "operation": operation,
                "iterations": iterations,
                "last_estimate": last_estimate,
                "shift": None if shift is None else str(shift),
            },
        )
        self.last_estimate = last_estimate
        self.shift = shift


class BranchAmbiguityError(LabError):
    """Raised when eigenvalue branches cannot be matched unambiguously."""

    def __init__(self, alpha: float, k: int, separation: float):
        super().__init__(
            code=ErrorCode.BRANCH_AMBIGUITY,
            message=(
                f"branch {k} at alpha={alpha:g} has two candidates within {separation:.3e}"
            ),
            details={"alpha": alpha, "k": k, "separation": separation},
        )


class ArtifactIOError(LabError):
    """Raised when an output artifact cannot be written."""

    def __init__(self, path: str, reason: str):
        super().__init__(
            code=ErrorCode.ARTIFACT_IO,
            message=f"Cannot write {path}: {reason}",
            details={"path": path, "reason": reason},
        )


class AcceptanceFailure(LabError):
    """Raised by ``verify`` when at least one criterion fails."""

    def __init__(self, failed: List[str]):
        super().__init__(
            code=ErrorCode.ACCEPTANCE_FAILED,
            message=f"{len(failed)} acceptance criteria failed: {', '.join(failed)}",
            details={"failed": failed},
            exit_status=EXIT_ACCEPTANCE,
        )


class InternalError(LabError):
    """Raised for unexpected internal errors."""

    def __init__(self, message: str = "Internal error"):
        super().__init__(code=ErrorCode.INTERNAL_ERROR, message=message)


def format_validation_errors(error: ValidationError) -> List[str]:
    """Flatten a pydantic ValidationError into ``field: message`` strings."""
    errors = []
    for item in error.errors():
        field = " -> ".join(str(x) for x in item["loc"]) or "config"
        msg = str(item["msg"])
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        errors.append(f"{field}: {msg}")
    return errors


class ErrorHandler:
    """Central error handler for CLI runs."""

    def __init__(self, debug: bool = False):
        self.debug = debug

    def translate(self, error: BaseException) -> LabError:
        """Map any exception onto the LabError hierarchy."""
        if isinstance(error, LabError):
            return error
        if isinstance(error, ValidationError):
            return InvalidConfigError(format_validation_errors(error))
        if isinstance(error, np.linalg.LinAlgError):
            return SolverBreakdownError("linear algebra", str(error))
        if isinstance(error, OSError):
            return ArtifactIOError(str(error.filename or "<unknown>"), error.strerror or str(error))
        return InternalError(f"{type(error).__name__}: {error}")

    def handle_error(
        self, error: BaseException, context: Optional[Dict[str, Any]] = None
    ) -> Tuple[int, Dict[str, Any]]:
        """
        Handle any exception and return the exit status and structured payload.

        Args:
            error: The exception to handle
            context: Optional context (command, config) for the log record

        Returns:
            Tuple of exit status and error payload
        """
        lab_error = self.translate(error)
        logger.error(
            f"{lab_error.code.value}: {lab_error.message}",
            exc_info=self.debug or isinstance(lab_error, InternalError),
            extra={"context": context or {}, "error_code": lab_error.code.value},
        )

        payload = lab_error.to_dict()
        if self.debug and lab_error is not error:
            payload["error"]["details"]["exception_type"] = type(error).__name__
            payload["error"]["details"]["exception_message"] = str(error)
            payload["error"]["details"]["traceback"] = "".join(
                traceback.format_exception(type(error), error, error.__traceback__)
            )
        return lab_error.exit_status, payload
