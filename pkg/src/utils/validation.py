"""Argument guards shared by the numerical modules."""

import math
from typing import Any, Optional

import numpy as np

from src.middleware.error_handler import InvalidInputError


def validate_alpha(alpha: Any, parameter_name: str = "alpha") -> float:
    """
    Validate a damping exponent against the admissible range [0, 1).

    Args:
        alpha: Candidate exponent
        parameter_name: Name used in error messages

    Returns:
        The exponent as float

    Raises:
        InvalidInputError: If alpha is not a finite real in [0, 1)
    """
    value = validate_finite(alpha, parameter_name)
    if not 0.0 <= value < 1.0:
        raise InvalidInputError(parameter_name, "alpha out of [0,1)")
    return value


def validate_finite(value: Any, parameter_name: str) -> float:
    """Validate that a value is a finite real number."""
    if isinstance(value, bool):
        raise InvalidInputError(parameter_name, "must be a real number")
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise InvalidInputError(parameter_name, "must be a real number")
    if not math.isfinite(number):
        raise InvalidInputError(parameter_name, "must be finite")
    return number


def validate_positive(value: Any, parameter_name: str) -> float:
    """Validate a strictly positive finite real."""
    number = validate_finite(value, parameter_name)
    if number <= 0.0:
        raise InvalidInputError(parameter_name, "must be positive")
    return number


def validate_interval(
    value: Any,
    parameter_name: str,
    lower: float,
    upper: float,
) -> float:
    """Validate a finite real inside the closed interval [lower, upper]."""
    number = validate_finite(value, parameter_name)
    if not lower <= number <= upper:
        raise InvalidInputError(parameter_name, f"must lie in [{lower:g}, {upper:g}]")
    return number


def validate_positive_int(value: Any, parameter_name: str, minimum: int = 1) -> int:
    """Validate an integer no smaller than ``minimum``."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInputError(parameter_name, "must be an integer")
    if value < minimum:
        raise InvalidInputError(parameter_name, f"must be >= {minimum}")
    return int(value)


def validate_even(value: Any, parameter_name: str = "n_elements") -> int:
    """Validate a positive even element count."""
    count = validate_positive_int(value, parameter_name, minimum=2)
    if count % 2:
        raise InvalidInputError(parameter_name, f"{parameter_name} must be even")
    return count


def validate_vector(
    value: Any,
    parameter_name: str,
    length: Optional[int] = None,
) -> np.ndarray:
    """Validate a one-dimensional finite array, optionally of a fixed length."""
    array = np.asarray(value)
    if array.ndim != 1:
        raise InvalidInputError(parameter_name, "must be one-dimensional")
    if length is not None and array.shape[0] != length:
        raise InvalidInputError(
            parameter_name, f"length {array.shape[0]} does not match expected {length}"
        )
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(parameter_name, "must contain only finite values")
    return array
