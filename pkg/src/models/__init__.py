from .config import FitSampling, InitialDataKind, RunConfig, Spacing, SpectrumMode
from .rates import DampingProfile, DecayRegime, RatePrediction
from .results import (
    ComparisonRow,
    CriterionResult,
    DecayFit,
    HardyCase,
    MeasuredRates,
    RateFit,
)

__all__ = [
    "ComparisonRow",
    "CriterionResult",
    "DampingProfile",
    "DecayFit",
    "DecayRegime",
    "FitSampling",
    "HardyCase",
    "InitialDataKind",
    "MeasuredRates",
    "RateFit",
    "RatePrediction",
    "RunConfig",
    "Spacing",
    "SpectrumMode",
]
