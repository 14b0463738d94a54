import numpy as np
import pytest

from src.core.discretization import assemble, build_mesh
from src.core.model import make_profile
from src.core.oracles import dense_generator
from src.core.spectral import (
    AMBIGUITY_TOL,
    _match,
    compute_spectrum,
    linearize_pencil,
    pencil_residuals,
    pencil_scale,
    trace_branches,
    write_branches_csv,
    write_spectrum_csv,
)
from src.core.verification import discrete_undamped_frequencies
from src.middleware.error_handler import BranchAmbiguityError, InvalidInputError


def _system(n_elements, alpha, scale=1.0):
    return assemble(build_mesh(n_elements), make_profile(alpha)).with_damping_scale(scale)


def _nearest_distance(values, reference):
    return np.min(np.abs(values[:, None] - reference[None, :]), axis=1)


class TestLinearization:
    """Tests for the companion linearization."""

    def test_undamped_oscillator(self, scalar_system):
        """M=1, K=4, D=0 has eigenvalues +-2i."""
        result = compute_spectrum(scalar_system(1.0, 4.0, 0.0))
        np.testing.assert_allclose(result.eigenvalues, [-2j, 2j], atol=1e-14)

    def test_overdamped_oscillator(self, scalar_system):
        """M=1, K=1, D=3 has two negative real roots."""
        result = compute_spectrum(scalar_system(1.0, 1.0, 3.0))
        expected = np.sort([(-3.0 - np.sqrt(5.0)) / 2.0, (-3.0 + np.sqrt(5.0)) / 2.0])
        np.testing.assert_allclose(np.sort(result.eigenvalues.real), expected, rtol=1e-13)
        np.testing.assert_allclose(result.eigenvalues.imag, 0.0, atol=1e-14)

    def test_block_structure(self, small_system):
        """A_lin = [[0, I], [-K, -D]] and B_lin = diag(I, M) for gamma = 1."""
        a_lin, b_lin = linearize_pencil(small_system)
        n = small_system.n_dof
        a = a_lin.toarray()
        np.testing.assert_array_equal(a[:n, :n], 0.0)
        np.testing.assert_array_equal(a[:n, n:], np.eye(n))
        np.testing.assert_array_equal(a[n:, :n], -small_system.stiffness.to_dense())
        np.testing.assert_array_equal(b_lin.toarray()[n:, n:], small_system.mass.to_dense())

    def test_rejects_nonpositive_gamma(self, small_system):
        """The scaling factor must be positive."""
        with pytest.raises(InvalidInputError, match="gamma"):
            linearize_pencil(small_system, gamma=0.0)

    def test_scale(self, scalar_system):
        """gamma = sqrt(||K|| / ||M||)."""
        assert pencil_scale(scalar_system(4.0, 9.0, 0.0)) == pytest.approx(1.5)

    def test_matches_dense_generator(self, small_system):
        """Pencil roots coincide with the eigenvalues of the dense generator."""
        result = compute_spectrum(small_system)
        reference = np.linalg.eigvals(dense_generator(small_system))
        scale = np.max(np.abs(reference))
        assert result.eigenvalues.shape == reference.shape
        assert np.max(_nearest_distance(result.eigenvalues, reference)) <= 1e-10 * scale
        assert np.max(_nearest_distance(reference, result.eigenvalues)) <= 1e-10 * scale


class TestComputeSpectrum:
    """Tests for eigenvalues of assembled systems."""

    @pytest.fixture(scope="class")
    def damped(self):
        """alpha = 0.5 on 64 elements."""
        return compute_spectrum(_system(64, 0.5))

    def test_dissipative_with_gap(self, damped):
        """Spectrum in the open left half-plane."""
        assert damped.abscissa < 0.0
        assert damped.axis_gap > 0.0
        assert damped.is_dissipative()

    def test_residual_certificates(self, damped):
        """Every eigenpair passes the relative residual test."""
        assert damped.residuals.shape == damped.eigenvalues.shape
        assert damped.max_residual <= 1e-8

    def test_conjugate_symmetry(self, damped):
        """Complex eigenvalues come in conjugate pairs."""
        values = damped.eigenvalues
        complex_ones = values[np.abs(values.imag) > 1e-8]
        scale = np.max(np.abs(values))
        assert np.max(_nearest_distance(complex_ones.conj(), values)) <= 1e-10 * scale

    def test_sorted_by_imaginary_part(self, damped):
        """Eigenvalues are ordered by Im."""
        assert np.all(np.diff(damped.eigenvalues.imag) >= 0.0)

    def test_upper_half(self, damped):
        """upper_half keeps Im > 0 in increasing order."""
        upper = damped.upper_half()
        assert np.all(upper.imag > 0.0)
        assert np.all(np.diff(upper.imag) >= 0.0)

    def test_undamped_frequencies(self):
        """D = 0 reproduces k pi / 2 and the exact discrete dispersion."""
        n = 64
        upper = compute_spectrum(_system(n, 0.0, scale=0.0)).upper_half()
        np.testing.assert_allclose(upper.real, 0.0, atol=1e-10)
        low = np.arange(1, n // 25 + 1) * np.pi / 2.0
        np.testing.assert_allclose(upper.imag[: low.shape[0]], low, rtol=1e-3)
        resolved = n // 10
        np.testing.assert_allclose(upper.imag[:resolved], discrete_undamped_frequencies(n, resolved),
                                   rtol=1e-8)

    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.75])
    @pytest.mark.parametrize("n_elements", [16, 32, 64])
    def test_dissipative_for_all_parameters(self, alpha, n_elements):
        """max Re <= 1e-10 max |lambda| across alpha and mesh size."""
        result = compute_spectrum(_system(n_elements, alpha))
        assert result.is_dissipative()
        assert result.axis_gap > 0.0

    def test_low_modes_stable_under_refinement(self):
        """The five lowest oscillatory eigenvalues move by at most 1% under doubling."""
        coarse = compute_spectrum(_system(64, 0.5)).upper_half()[:5]
        fine = compute_spectrum(_system(128, 0.5)).upper_half()[:5]
        assert np.max(np.abs(fine - coarse) / np.abs(coarse)) <= 0.01

    def test_undamped_limit(self):
        """Scaling D by eps -> 0 converges monotonically to the D = 0 spectrum."""
        reference = compute_spectrum(_system(32, 0.5, scale=0.0)).upper_half()[:5]
        errors = [
            np.max(np.abs(compute_spectrum(_system(32, 0.5, scale=eps)).upper_half()[:5] - reference))
            for eps in (1e-2, 1e-4)
        ]
        assert errors[1] < errors[0]
        assert errors[1] < 0.05 * errors[0]

    def test_shift_invert_agrees_with_dense(self):
        """Eigenvalues found about shifts are dense eigenvalues."""
        matrices = _system(64, 0.5)
        dense = compute_spectrum(matrices).eigenvalues
        result = compute_spectrum(matrices, mode="shift_invert", shifts=[0.0, 5.0], k_per_shift=10)
        scale = np.max(np.abs(dense))
        assert result.eigenvalues.shape[0] >= 10
        assert np.max(_nearest_distance(result.eigenvalues, dense)) <= 1e-8 * scale
        assert result.max_residual <= 1e-8

    def test_unknown_mode(self, small_system):
        """Unknown solver modes are rejected."""
        with pytest.raises(ValueError):
            compute_spectrum(small_system, mode="lanczos")

    def test_residuals_flag_wrong_pairs(self, scalar_system):
        """A wrong eigenvalue has a large residual."""
        system = scalar_system(1.0, 4.0, 0.0)
        residuals = pencil_residuals(system, np.array([1.0 + 0j]), np.ones((1, 1), dtype=complex))
        assert residuals[0] > 0.5


class TestTraceBranches:
    """Tests for branch tracking across alpha."""

    def test_first_branch_matches_spectrum(self):
        """With one alpha, branch k is the k-th upper eigenvalue."""
        points = trace_branches([0.5], n_elements=32, k_max=3)
        upper = compute_spectrum(_system(32, 0.5)).upper_half()
        assert [p.k for p in points] == [1, 2, 3]
        np.testing.assert_allclose([p.eigenvalue for p in points], upper[:3], rtol=1e-12)

    def test_undamped_column(self):
        """Without damping branch k sits near i k pi / 2."""
        points = trace_branches([0.0], n_elements=64, k_max=2, damping_scale=0.0)
        for p in points:
            assert p.eigenvalue.imag == pytest.approx(p.k * np.pi / 2.0, rel=1e-3)
            assert abs(p.eigenvalue.real) < 1e-10

    def test_real_part_depends_on_alpha(self):
        """The damping exponent moves the branches."""
        points = trace_branches([0.0, 0.5], n_elements=32, k_max=2, threads=2)
        by_alpha = {(p.alpha, p.k): p.eigenvalue for p in points}
        assert len(points) == 4
        assert by_alpha[(0.0, 1)].real != pytest.approx(by_alpha[(0.5, 1)].real, rel=1e-6)

    def test_ambiguous_match_reported(self):
        """Two equidistant candidates raise instead of guessing."""
        previous = np.array([1j])
        candidates = np.array([1j + 1e-8, 1j - 1e-8])
        with pytest.raises(BranchAmbiguityError, match="alpha=0.3"):
            _match(previous, candidates, 0.3)

    def test_clear_match(self):
        """Well separated candidates are assigned to the nearest branch."""
        previous = np.array([1j, 2j])
        candidates = np.array([2.1j, 0.9j, 5j])
        np.testing.assert_allclose(_match(previous, candidates, 0.3), [0.9j, 2.1j])
        assert AMBIGUITY_TOL == 1e-6

    def test_rejects_bad_alpha(self):
        """Alphas outside [0, 1) are rejected."""
        with pytest.raises(InvalidInputError, match=r"alpha out of \[0,1\)"):
            trace_branches([0.5, 1.0], n_elements=16, k_max=2)


class TestSpectrumArtifacts:
    """Tests for CSV output."""

    def test_spectrum_csv(self, scalar_system, tmp_path):
        """re,im header and one row per eigenvalue."""
        result = compute_spectrum(scalar_system(1.0, 4.0, 0.0))
        lines = write_spectrum_csv(result, tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "re,im"
        assert len(lines) == 3

    def test_branches_csv(self, tmp_path):
        """alpha,k,re,im header."""
        points = trace_branches([0.25], n_elements=16, k_max=2)
        lines = write_branches_csv(points, tmp_path / "branches.csv").read_text().splitlines()
        assert lines[0] == "alpha,k,re,im"
        assert lines[1].startswith("0.25,1,")
