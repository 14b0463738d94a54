import numpy as np
import pytest

from src.core.analysis import (
    Trial,
    build_comparison_table,
    hardy_divergence_probe,
    hardy_ratio,
    hardy_sweep,
    render_comparison_text,
    write_comparison_csv,
    write_hardy_csv,
)
from src.middleware.error_handler import InvalidInputError
from src.models.results import MeasuredRates


class TestHardyRatio:
    """Tests for the exact weighted Hardy ratio."""

    @pytest.fixture
    def nodes(self):
        """Uniform nodes on [0, 1]."""
        return np.linspace(0.0, 1.0, 9)

    @pytest.mark.parametrize("alpha,beta,expected", [
        (0.0, 0.0, 1.0 / 3.0),
        (0.5, -0.5, 8.0 / 5.0),
    ])
    def test_linear_witness(self, nodes, alpha, beta, expected):
        """xi = 1 - x against the closed-form integrals."""
        assert hardy_ratio(nodes, 1.0 - nodes, alpha, beta) == pytest.approx(expected, rel=1e-12)

    def test_mesh_independent_for_linear(self):
        """A linear xi is represented exactly on any mesh."""
        coarse = np.array([0.0, 1.0])
        fine = np.linspace(0.0, 1.0, 65) ** 2
        assert hardy_ratio(coarse, 1.0 - coarse, 0.5, 1.0) == pytest.approx(
            hardy_ratio(fine, 1.0 - fine, 0.5, 1.0), rel=1e-12)

    def test_zero_function(self, nodes):
        """xi = 0 gives ratio 0."""
        assert hardy_ratio(nodes, np.zeros_like(nodes), 0.0, 0.0) == 0.0

    @pytest.mark.parametrize("alpha,beta,parameter", [
        (0.0, -1.0, "beta"),
        (0.0, -2.0, "beta"),
        (1.0, 0.0, "alpha"),
    ])
    def test_rejects_excluded_exponents(self, nodes, alpha, beta, parameter):
        """beta <= -1 or alpha >= 1 are outside the inequality's hypotheses."""
        with pytest.raises(InvalidInputError, match=parameter):
            hardy_ratio(nodes, 1.0 - nodes, alpha, beta)

    def test_requires_zero_at_one(self, nodes):
        """xi(1) must vanish."""
        with pytest.raises(InvalidInputError, match=r"xi\(1\)"):
            hardy_ratio(nodes, np.ones_like(nodes), 0.0, 0.0)

    def test_rejects_bad_nodes(self):
        """Nodes must increase from >= 0 to 1."""
        with pytest.raises(InvalidInputError, match="nodes"):
            hardy_ratio(np.array([0.0, 0.7, 0.5]), np.array([1.0, 0.5, 0.0]), 0.0, 0.0)

    def test_flat_first_element_with_singular_weight(self):
        """alpha = -1 stays finite when the first element is flat."""
        nodes = np.array([0.0, 0.5, 1.0])
        ratio = hardy_ratio(nodes, np.array([0.5, 0.5, 0.0]), -1.0, 0.0)
        numerator = 0.5**2 * 0.5 + 0.5**2 / 3.0 * 0.5
        assert ratio == pytest.approx(numerator / (1.0 * np.log(2.0)), rel=1e-12)


class TestHardySweep:
    """Tests for the randomized Hardy sweep."""

    def test_empty(self):
        """n_random = 0 gives an empty sweep."""
        assert hardy_sweep([0.0], [0.0], n_random=0) == []

    def test_witness_lower_bound(self):
        """The (0, 0) constant is at least 1/3."""
        (case,) = hardy_sweep([0.0], [0.0], n_random=5)
        assert case.ratio >= 1.0 / 3.0 - 1e-14
        assert case.n_samples == 6

    def test_random_trial_beats_witness(self):
        """At (0, 0) a smooth trial exceeds 1/3 without passing the sharp constant 4/pi^2."""
        (case,) = hardy_sweep([0.0], [0.0], n_random=4, seed=7)
        assert case.active_trial != "witness"
        assert 0.35 < case.ratio <= 4.0 / np.pi**2 + 1e-12

    def test_growth_compares_same_functions(self):
        """Smooth trials give nearly the same maximum on both meshes."""
        (case,) = hardy_sweep([0.5], [1.0], n_random=8, seed=2)
        assert 0.95 < case.growth < 1.05

    def test_default_grid_bounded(self):
        """Refinement from 64 to 512 elements grows no constant by more than 50%."""
        cases = hardy_sweep([-1.0, 0.0, 0.5, 0.9], [-0.5, 0.0, 1.0, 2.0], n_random=5, seed=3)
        assert len(cases) == 16
        assert all(np.isfinite(c.ratio) and c.growth < 1.5 for c in cases)

    def test_reproducible_across_schedules(self):
        """Results depend on the seed only, not on thread count."""
        a = hardy_sweep([0.0, 0.5], [0.0, 1.0], n_random=4, seed=11, threads=1)
        b = hardy_sweep([0.0, 0.5], [0.0, 1.0], n_random=4, seed=11, threads=4)
        assert a == b

    def test_rejects_inadmissible_pair(self):
        """Excluded exponents are rejected before sampling."""
        with pytest.raises(InvalidInputError, match="beta"):
            hardy_sweep([0.0], [-1.0], n_random=2)

    def test_write_csv(self, tmp_path):
        """Hardy CSV header and row count."""
        cases = hardy_sweep([0.0], [0.0, 1.0], n_random=2)
        lines = write_hardy_csv(cases, tmp_path / "hardy.csv").read_text().splitlines()
        assert lines[0] == "alpha,beta,ratio_coarse,ratio,growth,n_samples"
        assert len(lines) == 3


class TestTrial:
    """Tests for sweep test functions."""

    @pytest.fixture
    def nodes(self):
        return np.linspace(0.0, 1.0, 65)

    def test_first_sine_mode(self, nodes):
        """A single sine mode is cos(pi x / 2)."""
        params = np.zeros(8)
        params[0] = 1.0
        values = Trial("sine", params).values(nodes, 0.0)
        np.testing.assert_allclose(values, np.cos(0.5 * np.pi * nodes), atol=1e-14)

    @pytest.mark.parametrize("trial", [
        Trial("witness", np.zeros(0)),
        Trial("interpolated", np.array([0.3, -1.2, 0.7, 0.0])),
        Trial("sine", np.array([0.4, -0.2, 0.1])),
        Trial("power", np.array([2.5])),
        Trial("bump", np.array([0.2])),
    ])
    def test_vanishes_at_one(self, nodes, trial):
        """Every family satisfies xi(1) = 0 exactly."""
        assert trial.values(nodes, 0.5)[-1] == 0.0

    def test_interpolated_knots(self, nodes):
        """Knot values are reproduced on meshes containing the knots."""
        knots = np.array([0.3, -1.2, 0.7, 0.4, 0.0])
        values = Trial("interpolated", knots).values(nodes, 0.0)
        np.testing.assert_allclose(values[[0, 16, 32, 48, 64]], knots, atol=1e-15)

    def test_flat_first_element(self, nodes):
        """alpha <= -1 holds the first element flat."""
        values = Trial("bump", np.array([0.3])).values(nodes, -1.0)
        assert values[0] == values[1] > 0.0


class TestDivergenceProbe:
    """Tests for the beta = -1 counterexample."""

    def test_grows_without_bound(self):
        """The ratio increases as the lower limit shrinks and passes any fixed bound."""
        ratios = hardy_divergence_probe([10.0 ** -k for k in range(2, 13, 2)], alpha=0.0)
        assert np.all(np.diff(ratios) > 0.0)
        assert ratios[-1] > 20.0

    def test_admissible_beta_stays_bounded(self):
        """For beta = 0 the same probe converges."""
        ratios = hardy_divergence_probe([1e-4, 1e-8, 1e-12], alpha=0.0, beta=0.0)
        assert ratios[-1] == pytest.approx(1.0 / 3.0, rel=1e-6)

    def test_rejects_bad_limit(self):
        """Lower limits lie in (0, 1)."""
        with pytest.raises(InvalidInputError, match="lower_limit"):
            hardy_divergence_probe([0.0], alpha=0.0)


class TestComparisonTable:
    """Tests for the rate comparison table."""

    def test_rows(self):
        """Predicted orders per alpha."""
        rows = build_comparison_table([0.0, 0.5])
        assert [(r.decay_order, r.prior_order) for r in rows] == [(2.0, 1.5), (3.0, 2.5)]
        assert all(r.theta_fit is None and r.slope_energy is None for r in rows)

    def test_empty(self):
        """No alphas, no rows."""
        assert build_comparison_table([]) == []

    def test_order_gap_is_one_half(self):
        """decay_order - prior_order = 1/2 on the default grid."""
        for row in build_comparison_table([0.0, 0.25, 0.5, 0.75]):
            assert row.decay_order - row.prior_order == pytest.approx(0.5, abs=1e-14)

    def test_measured_columns(self):
        """Supplied fits fill the measured columns of matching rows."""
        rows = build_comparison_table([0.0, 0.5], {0.5: MeasuredRates(theta_fit=0.34, slope_energy=-5.9)})
        assert rows[0].theta_fit is None
        assert (rows[1].theta_fit, rows[1].slope_energy) == (0.34, -5.9)

    def test_render_text(self):
        """Header, one line per alpha and the exponential row."""
        text = render_comparison_text(build_comparison_table([0.0, 0.5]))
        lines = text.splitlines()
        assert lines[0].startswith("alpha | damping coefficient | decay rate of solution")
        assert len(lines) == 2 + 2 + 1
        assert "optimal polynomial t^-2" in lines[2]
        assert "polynomial t^-3" in lines[3] and "t^-2.5" in lines[3]
        assert lines[-1].startswith(">= 1") and "exponential decay rate" in lines[-1]

    def test_render_measured(self):
        """Measured values are shown with four decimals."""
        rows = build_comparison_table([0.5], {0.5: MeasuredRates(theta_fit=0.3333333)})
        assert "0.3333" in render_comparison_text(rows)

    def test_write_csv(self, tmp_path):
        """Comparison CSV with empty cells for missing fits."""
        rows = build_comparison_table([0.0, 0.25, 0.5, 0.75])
        lines = write_comparison_csv(rows, tmp_path / "table.csv").read_text().splitlines()
        assert lines[0] == "alpha,decay_order,prior_order,theta_fit,slope_energy"
        assert len(lines) == 5
        assert lines[1] == "0.0,2.0,1.5,,"
