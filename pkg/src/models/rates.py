from enum import Enum
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.middleware.error_handler import InvalidInputError


class DecayRegime(str, Enum):
    """Qualitative decay behaviour of the damped string for b(x) = x^alpha."""

    OPTIMAL_POLYNOMIAL = "optimal_polynomial"
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


class DampingProfile(BaseModel):
    """Kelvin-Voigt coefficient: zero on [-1, 0], x^alpha on (0, 1]."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., description="Damping exponent in [0, 1)")
    left_support_end: float = 0.0
    domain: Tuple[float, float] = (-1.0, 1.0)

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: float) -> float:
        """Keep alpha inside the admissible range."""
        if not 0.0 <= v < 1.0:
            raise ValueError("alpha out of [0,1)")
        return v

    @field_validator("left_support_end")
    @classmethod
    def validate_support(cls, v: float) -> float:
        if v != 0.0:
            raise ValueError("left_support_end is fixed at 0")
        return v

    @field_validator("domain")
    @classmethod
    def validate_domain(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if tuple(v) != (-1.0, 1.0):
            raise ValueError("domain is fixed at [-1, 1]")
        return v

    def value(self, x: float) -> float:
        """Coefficient at a single point of [-1, 1]."""
        if not -1.0 <= x <= 1.0:
            raise InvalidInputError("x", f"{x!r} outside [-1, 1]")
        if x <= 0.0:
            return 0.0
        return float(x ** self.alpha)

    def values(self, x: Union[float, npt.ArrayLike]) -> npt.NDArray[np.float64]:
        """Vectorized coefficient on an array of points in [-1, 1]."""
        points = np.asarray(x, dtype=float)
        if np.any(points < -1.0) or np.any(points > 1.0):
            raise InvalidInputError("x", "points outside [-1, 1]")
        positive = np.where(points > 0.0, points, 1.0)
        return np.where(points > 0.0, np.power(positive, self.alpha), 0.0)


class RatePrediction(BaseModel):
    """Closed-form exponents for a given alpha."""

    model_config = ConfigDict(frozen=True)

    alpha: float
    theta: float = Field(..., description="Resolvent growth exponent (1-a)/(2-a)")
    decay_order: float = Field(..., description="Norm decay order (2-a)/(1-a)")
    prior_order: float = Field(..., description="Previously best order (3-a)/(2(1-a))")
    regime: DecayRegime

    @property
    def energy_slope(self) -> float:
        """Expected slope of log(energy) against log(t); energy is the squared norm."""
        return -2.0 * self.decay_order

    @property
    def prior_energy_slope(self) -> float:
        return -2.0 * self.prior_order
