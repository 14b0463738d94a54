from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator


class InitialDataKind(str, Enum):
    """Initial data families for time simulations."""

    SINE_DISPLACEMENT = "sine_displacement"
    BUMP_VELOCITY = "bump_velocity"
    GRAPH_NORMALIZED = "graph_normalized"


class Spacing(str, Enum):
    """Frequency grid spacing for resolvent scans."""

    LOG = "log"
    LINEAR = "linear"


class SpectrumMode(str, Enum):
    """Eigenvalue solver selection."""

    DENSE = "dense"
    SHIFT_INVERT = "shift_invert"


class FitSampling(str, Enum):
    """Frequencies the resolvent exponent is fitted on."""

    GRID = "grid"
    ENVELOPE = "envelope"


class RunConfig(BaseModel):
    """Validated configuration of a CLI run.

    Field names are also the keys accepted in JSON configuration files.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: Optional[float] = None
    n_elements: int = 256
    grading: float = 1.0
    dt: float = 1e-3
    t_final: float = 20.0
    omega_min: float = 1.0
    omega_max: float = 20.0
    omega_points: int = 50
    seed: int = 0
    output_dir: str = "results"

    cap_divisor: float = 10.0
    threads: Optional[int] = None
    sample_every: int = 10
    initial_data: InitialDataKind = InitialDataKind.GRAPH_NORMALIZED
    t_lo: Optional[float] = None
    t_hi: Optional[float] = None
    omega_lo: Optional[float] = None
    omega_hi: Optional[float] = None
    spacing: Spacing = Spacing.LOG
    fit_sampling: FitSampling = FitSampling.GRID
    spectrum_mode: SpectrumMode = SpectrumMode.DENSE
    k_max: int = 6
    alphas: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75])
    betas: List[float] = Field(default_factory=lambda: [-0.5, 0.0, 1.0, 2.0])
    hardy_alphas: List[float] = Field(default_factory=lambda: [-1.0, 0.0, 0.5, 0.9])
    n_random: int = 20

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 <= v < 1.0:
            raise ValueError("alpha out of [0,1)")
        return v

    @field_validator("n_elements")
    @classmethod
    def validate_n_elements(cls, v: int) -> int:
        if v < 2:
            raise ValueError("n_elements must be >= 2")
        if v % 2:
            raise ValueError("n_elements must be even")
        return v

    @field_validator("grading")
    @classmethod
    def validate_grading(cls, v: float) -> float:
        if v < 1.0:
            raise ValueError("grading must be >= 1")
        return v

    @field_validator("dt", "t_final", "omega_min", "omega_max", "cap_divisor")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError("must be > 0")
        return v

    @field_validator("omega_points", "sample_every", "k_max")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("n_random", "seed")
    @classmethod
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("must be a positive integer")
        return v

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, v: List[float]) -> List[float]:
        for a in v:
            if not 0.0 <= a < 1.0:
                raise ValueError("alpha out of [0,1)")
        return v

    @field_validator("betas")
    @classmethod
    def validate_betas(cls, v: List[float]) -> List[float]:
        if any(b <= -1.0 for b in v):
            raise ValueError("beta must be > -1")
        return v

    @field_validator("hardy_alphas")
    @classmethod
    def validate_hardy_alphas(cls, v: List[float]) -> List[float]:
        if any(a >= 1.0 for a in v):
            raise ValueError("Hardy alpha must be < 1")
        return v

    @field_validator("omega_max")
    @classmethod
    def validate_omega_order(cls, v: float, info: ValidationInfo) -> float:
        omega_min = info.data.get("omega_min")
        if omega_min is not None and omega_min >= v:
            raise ValueError("omega_min must be < omega_max")
        return v

    @field_validator("t_hi")
    @classmethod
    def validate_time_window(cls, v: Optional[float], info: ValidationInfo) -> Optional[float]:
        t_lo = info.data.get("t_lo")
        if v is not None and t_lo is not None and t_lo >= v:
            raise ValueError("t_lo must be < t_hi")
        return v

    @field_validator("omega_hi")
    @classmethod
    def validate_omega_window(cls, v: Optional[float], info: ValidationInfo) -> Optional[float]:
        omega_lo = info.data.get("omega_lo")
        if v is not None and omega_lo is not None and omega_lo >= v:
            raise ValueError("omega_lo must be < omega_hi")
        return v
