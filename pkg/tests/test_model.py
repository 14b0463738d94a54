import pytest

from src.core.model import damping_value, decay_regime, make_profile, predict_rates, validate_config
from src.middleware.error_handler import InvalidConfigError, InvalidInputError
from src.models.config import InitialDataKind, RunConfig
from src.models.rates import DecayRegime


class TestDampingProfile:
    """Tests for the damping coefficient."""

    @pytest.mark.parametrize("alpha,x,expected", [
        (0.5, 0.25, 0.5),
        (0.7, -0.5, 0.0),
        (0.0, 0.5, 1.0),
        (0.3, 0.0, 0.0),
        (0.3, 1.0, 1.0),
    ])
    def test_damping_value(self, alpha, x, expected):
        """b(x) vanishes on [-1, 0] and equals x^alpha on (0, 1]."""
        assert damping_value(make_profile(alpha), x) == pytest.approx(expected, abs=1e-15)

    def test_damping_value_outside_domain(self):
        """Points outside [-1, 1] are rejected."""
        with pytest.raises(InvalidInputError, match="outside"):
            damping_value(make_profile(0.5), 1.5)

    @pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.2])
    def test_make_profile_rejects_alpha(self, alpha):
        """Exponents outside [0, 1) are rejected."""
        with pytest.raises(InvalidInputError, match=r"alpha out of \[0,1\)"):
            make_profile(alpha)

    def test_vectorized_values_match_scalar(self):
        """values() agrees with value() pointwise."""
        profile = make_profile(0.25)
        points = [-1.0, -0.3, 0.0, 0.1, 0.5, 1.0]
        for x, y in zip(points, profile.values(points)):
            assert y == pytest.approx(profile.value(x), rel=1e-15)


class TestPredictRates:
    """Tests for the closed-form rate predictions."""

    @pytest.mark.parametrize("alpha,theta,order,prior", [
        (0.0, 0.5, 2.0, 1.5),
        (0.5, 1.0 / 3.0, 3.0, 2.5),
        (0.75, 0.2, 5.0, 4.5),
    ])
    def test_known_values(self, alpha, theta, order, prior):
        """Exponents at tabulated alphas."""
        rates = predict_rates(alpha)
        assert rates.theta == pytest.approx(theta, rel=1e-14)
        assert rates.decay_order == pytest.approx(order, rel=1e-14)
        assert rates.prior_order == pytest.approx(prior, rel=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 0.1, 0.33, 0.5, 0.9, 0.999])
    def test_relations(self, alpha):
        """theta * decay_order = 1 and the new order beats the prior one by 1/2."""
        rates = predict_rates(alpha)
        assert rates.theta * rates.decay_order == pytest.approx(1.0, rel=1e-14)
        assert rates.decay_order - rates.prior_order == pytest.approx(0.5, abs=1e-9)
        assert 0.0 < rates.theta <= 0.5

    def test_order_blows_up_near_one(self):
        """decay_order grows without bound as alpha approaches 1."""
        assert predict_rates(0.999).decay_order > 1000.0

    def test_energy_slopes(self):
        """Energy is the squared norm, so its slope doubles the order."""
        rates = predict_rates(0.0)
        assert rates.energy_slope == -4.0
        assert rates.prior_energy_slope == -3.0

    @pytest.mark.parametrize("alpha,regime", [
        (0.0, DecayRegime.OPTIMAL_POLYNOMIAL),
        (0.4, DecayRegime.POLYNOMIAL),
        (1.0, DecayRegime.EXPONENTIAL),
        (2.5, DecayRegime.EXPONENTIAL),
    ])
    def test_decay_regime(self, alpha, regime):
        """Regime classification over alpha >= 0."""
        assert decay_regime(alpha) is regime


class TestValidateConfig:
    """Tests for run configuration validation."""

    def test_well_formed(self):
        """A valid mapping is accepted and defaults are filled."""
        config = validate_config({"alpha": 0.5, "n_elements": 128})
        assert isinstance(config, RunConfig)
        assert config.n_elements == 128
        assert config.initial_data is InitialDataKind.GRAPH_NORMALIZED
        assert config.alphas == [0.0, 0.25, 0.5, 0.75]

    def test_model_instance_roundtrip(self):
        """An existing RunConfig validates to an equal one."""
        config = RunConfig(alpha=0.25)
        assert validate_config(config) == config

    @pytest.mark.parametrize("data,message", [
        ({"alpha": 1.0}, r"alpha: alpha out of \[0,1\)"),
        ({"n_elements": 7}, "n_elements must be even"),
        ({"grading": 0.5}, "grading must be >= 1"),
        ({"omega_min": 5.0, "omega_max": 2.0}, "omega_min must be < omega_max"),
        ({"betas": [-1.0]}, "beta must be > -1"),
        ({"t_lo": 10.0, "t_hi": 5.0}, "t_lo must be < t_hi"),
    ])
    def test_rejects(self, data, message):
        """Each violated invariant is reported as field: message."""
        with pytest.raises(InvalidConfigError, match=message):
            validate_config(data)

    def test_reports_every_violation(self):
        """All violations are collected, not just the first."""
        with pytest.raises(InvalidConfigError) as excinfo:
            validate_config({"alpha": 1.5, "n_elements": 3, "dt": -1.0})
        assert len(excinfo.value.errors) == 3

    def test_unknown_field(self):
        """Unknown keys are rejected."""
        with pytest.raises(InvalidConfigError, match="unknown_key"):
            validate_config({"unknown_key": 1})
