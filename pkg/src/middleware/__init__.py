"""Cross-cutting plumbing: errors, configuration loading and artifact output."""

from .artifact_formatter import (
    atomic_writer,
    format_float,
    format_report,
    serialize_json,
    write_csv,
    write_json,
    write_text,
)
from .error_handler import (
    AcceptanceFailure,
    ArtifactIOError,
    BranchAmbiguityError,
    ConvergenceError,
    EnergyFloorError,
    ErrorCode,
    ErrorHandler,
    InternalError,
    InvalidConfigError,
    InvalidInputError,
    LabError,
    ResolutionCapError,
    SingularSystemError,
    SolverBreakdownError,
    UsageError,
    WindowTooSmallError,
)

__all__ = [
    'AcceptanceFailure',
    'ArtifactIOError',
    'BranchAmbiguityError',
    'ConvergenceError',
    'EnergyFloorError',
    'ErrorCode',
    'ErrorHandler',
    'InternalError',
    'InvalidConfigError',
    'InvalidInputError',
    'LabError',
    'ResolutionCapError',
    'SingularSystemError',
    'SolverBreakdownError',
    'UsageError',
    'WindowTooSmallError',
    'atomic_writer',
    'format_float',
    'format_report',
    'serialize_json',
    'write_csv',
    'write_json',
    'write_text',
]
