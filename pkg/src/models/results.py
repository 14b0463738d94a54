from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class RateFit(BaseModel):
    """Log-log fit of the resolvent growth over a frequency window."""

    model_config = ConfigDict(frozen=True)

    slope: float = Field(..., description="Fitted theta: slope of log(1/sigma_min) vs log(omega)")
    intercept: float
    residual: float = Field(..., ge=0.0)
    window: Tuple[float, float]
    r_lower: float = Field(..., description="min over the window of omega^slope * sigma_min")
    n_samples: int

    @field_validator("window")
    @classmethod
    def validate_window(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not v[0] < v[1]:
            raise ValueError("omega_lo must be < omega_hi")
        return v


class DecayFit(BaseModel):
    """Log-log fit of an energy trace over a time window."""

    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    residual: float = Field(..., ge=0.0)
    window: Tuple[float, float]
    n_samples: int


class HardyCase(BaseModel):
    """Empirical weighted Hardy ratio for one (alpha, beta) pair."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., lt=1.0)
    beta: float = Field(..., gt=-1.0)
    ratio: float = Field(..., ge=0.0, description="Max ratio on the fine mesh")
    ratio_coarse: float = Field(..., ge=0.0, description="Max ratio on the coarse mesh")
    n_samples: int
    active_trial: str = Field("witness", description="Trial family attaining the fine-mesh max")

    @property
    def growth(self) -> float:
        """Fine-to-coarse ratio of the empirical constants."""
        if self.ratio_coarse == 0.0:
            return 0.0 if self.ratio == 0.0 else float("inf")
        return self.ratio / self.ratio_coarse


class MeasuredRates(BaseModel):
    """Measured exponents attached to a comparison row."""

    model_config = ConfigDict(frozen=True)

    theta_fit: Optional[float] = None
    slope_energy: Optional[float] = None


class ComparisonRow(BaseModel):
    """One line of the rate comparison table."""

    model_config = ConfigDict(frozen=True)

    alpha: float
    decay_order: float
    prior_order: float
    theta_fit: Optional[float] = None
    slope_energy: Optional[float] = None


class CriterionResult(BaseModel):
    """Outcome of one acceptance criterion."""

    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    detail: str
