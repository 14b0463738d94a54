"""Continuous-problem parameters and closed-form rate predictions."""

from typing import Any, Mapping, Union

from pydantic import ValidationError

from src.middleware.error_handler import InvalidConfigError, InvalidInputError, format_validation_errors
from src.models.config import RunConfig
from src.models.rates import DampingProfile, DecayRegime, RatePrediction
from src.utils.validation import validate_alpha, validate_finite


def make_profile(alpha: float) -> DampingProfile:
    """Build a damping profile, reporting a bad exponent as invalid input."""
    return DampingProfile(alpha=validate_alpha(alpha))


def damping_value(profile: DampingProfile, x: float) -> float:
    """b(x): 0 on [-1, 0], x^alpha on (0, 1]."""
    return profile.value(validate_finite(x, "x"))


def decay_regime(alpha: float) -> DecayRegime:
    """Classify the decay of the string for b(x) = x^alpha, alpha >= 0."""
    value = validate_finite(alpha, "alpha")
    if value < 0.0:
        raise InvalidInputError("alpha", "must be >= 0")
    if value == 0.0:
        return DecayRegime.OPTIMAL_POLYNOMIAL
    if value < 1.0:
        return DecayRegime.POLYNOMIAL
    return DecayRegime.EXPONENTIAL


def predict_rates(alpha: float) -> RatePrediction:
    """
    Closed-form exponents for 0 <= alpha < 1.

    theta bounds the resolvent growth |omega|^theta, the norm decays like
    t^(-1/theta), and prior_order is the previously best known order.
    """
    a = validate_alpha(alpha)
    theta = (1.0 - a) / (2.0 - a)
    return RatePrediction(
        alpha=a,
        theta=theta,
        decay_order=(2.0 - a) / (1.0 - a),
        prior_order=(3.0 - a) / (2.0 * (1.0 - a)),
        regime=decay_regime(a),
    )


def validate_config(config: Union[RunConfig, Mapping[str, Any]]) -> RunConfig:
    """
    Validate a run configuration, filling defaults for omitted fields.

    Raises:
        InvalidConfigError: listing every violated invariant as ``field: message``
    """
    data = config.model_dump() if isinstance(config, RunConfig) else dict(config)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidConfigError(format_validation_errors(e)) from e
