"""
Structured logging configuration for kv-string-lab.

Provides JSON-structured logging for production runs and a human-readable format
for interactive work, with run tracking and timing of expensive numerical steps.
"""

import json
import logging
import os
import sys
import time
from contextvars import ContextVar
from datetime import datetime, timezone
from functools import wraps
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar, cast

F = TypeVar("F", bound=Callable[..., Any])

# Context variable for run ID tracking
run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)

_RESERVED_ATTRS = frozenset(
    [
        "name", "msg", "args", "created", "filename", "funcName", "levelname",
        "levelno", "lineno", "module", "msecs", "pathname", "process",
        "processName", "relativeCreated", "thread", "threadName", "getMessage",
        "stack_info", "exc_info", "exc_text", "taskName",
    ]
)


def _env() -> str:
    return os.getenv("ENVIRONMENT", "development")


class StructuredFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON."""
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        run_id = run_id_var.get()
        if run_id:
            log_data["run_id"] = run_id

        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS:
                log_data[key] = value

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


class HumanReadableFormatter(logging.Formatter):
    """Human-readable formatter for interactive runs."""

    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }
    RESET = "\033[0m"

    def __init__(self) -> None:
        super().__init__(
            fmt="%(asctime)s | %(levelname)-8s | %(name)-24s | %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with colour coding on a terminal."""
        run_id = run_id_var.get()
        if run_id:
            record.msg = f"[{run_id[:8]}] {record.msg}"

        if _env() == "development" and sys.stderr.isatty():
            levelname = record.levelname
            if levelname in self.COLORS:
                record.levelname = f"{self.COLORS[levelname]}{levelname}{self.RESET}"

        return super().format(record)


def setup_logging(level: Optional[str] = None) -> None:
    """Configure logging based on environment.

    Args:
        level: Explicit level name; falls back to ``LOG_LEVEL`` (default INFO).
    """
    root_logger = logging.getLogger()
    level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    root_logger.setLevel(getattr(logging, level_name, logging.INFO))
    root_logger.handlers.clear()

    # stdout is reserved for CLI reports
    console_handler = logging.StreamHandler(sys.stderr)
    if _env() == "production":
        console_handler.setFormatter(StructuredFormatter())
    else:
        console_handler.setFormatter(HumanReadableFormatter())
    root_logger.addHandler(console_handler)

    log_file = os.getenv("LOG_FILE", "logs/kv-lab.log")
    if _env() == "production" and log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=int(os.getenv("MAX_LOG_SIZE", "10485760")),
            backupCount=int(os.getenv("BACKUP_COUNT", "5")),
        )
        file_handler.setFormatter(StructuredFormatter())
        root_logger.addHandler(file_handler)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a specific module."""
    return logging.getLogger(name)


def set_run_id(run_id: str) -> None:
    """Set the run ID for the current context."""
    run_id_var.set(run_id)


def clear_run_id() -> None:
    """Clear the run ID from the current context."""
    run_id_var.set(None)


class LabLogger:
    """Logger with convenience methods for numerical runs."""

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def log_run_start(self, command: str, config: Optional[Dict[str, Any]] = None) -> None:
        """
        Log the start of a CLI command.

        Args:
            command: Subcommand name
            config: Validated run configuration
        """
        self.logger.info(
            f"Run started: {command}",
            extra={"command": command, "config": config, "event": "run_started"},
        )

    def log_run_complete(self, command: str, duration: float) -> None:
        """Log successful completion of a command."""
        self.logger.info(
            f"Run completed: {command} in {duration:.3f}s",
            extra={"command": command, "duration": duration, "event": "run_completed"},
        )

    def log_error(
        self, operation: str, error: BaseException, context: Optional[Dict[str, Any]] = None
    ) -> None:
        """
        Log an error with context.

        Args:
            operation: Operation or command that failed
            error: Exception that occurred
            context: Additional error context
        """
        extra: Dict[str, Any] = {
            "operation": operation,
            "error_type": type(error).__name__,
            "event": "run_error",
        }
        if context:
            extra.update(context)
        self.logger.error(f"Error in {operation}: {error}", exc_info=True, extra=extra)

    def log_performance(self, operation: str, duration: float, **metrics: Any) -> None:
        """Log wall time and size metrics of a numerical operation."""
        details = ", ".join(f"{key}={value}" for key, value in sorted(metrics.items()))
        self.logger.info(
            f"Performance: {operation} - {duration:.3f}s" + (f" ({details})" if details else ""),
            extra={"operation": operation, "duration": duration, "event": "performance_metric",
                   **metrics},
        )

    def debug(self, msg: str, **kwargs: Any) -> None:
        """Debug level logging with extra context."""
        self.logger.debug(msg, extra=kwargs)

    def info(self, msg: str, **kwargs: Any) -> None:
        """Info level logging with extra context."""
        self.logger.info(msg, extra=kwargs)

    def warning(self, msg: str, **kwargs: Any) -> None:
        """Warning level logging with extra context."""
        self.logger.warning(msg, extra=kwargs)

    def error(self, msg: str, exc_info: bool = False, **kwargs: Any) -> None:
        """Error level logging with extra context."""
        self.logger.error(msg, exc_info=exc_info, extra=kwargs)


def get_lab_logger(name: str) -> LabLogger:
    """
    Get an enhanced logger instance.

    Args:
        name: Module name (typically __name__)

    Returns:
        Enhanced logger instance
    """
    return LabLogger(get_logger(name))


def log_timing(operation: Optional[str] = None) -> Callable[[F], F]:
    """
    Decorator to log the execution time of a numerical operation.

    Args:
        operation: Optional custom operation name for logging
    """

    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            logger = get_lab_logger(func.__module__)
            name = operation or func.__name__
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.log_error(name, e, {"duration": time.perf_counter() - start_time})
                raise
            logger.log_performance(name, time.perf_counter() - start_time)
            return result

        return cast(F, wrapper)

    return decorator
