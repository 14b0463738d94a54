"""
Resolvent of the generator on the imaginary axis, measured in the energy norm.

(i omega - A) U = F reduces to one complex tridiagonal solve with
S(omega) = -omega^2 M + i omega D + K. Its energy adjoint reduces to a solve
with S(omega)^H, so a single LU factorization serves both directions.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks
from scipy.sparse.linalg import splu

from src.core.discretization import (
    State,
    SystemMatrices,
    apply_generator,
    combine,
    energy_inner,
)
from src.core.model import predict_rates
from src.middleware.artifact_formatter import write_csv
from src.middleware.error_handler import (
    ConvergenceError,
    InvalidInputError,
    ResolutionCapError,
    SingularSystemError,
    WindowTooSmallError,
)
from src.models.config import Spacing
from src.models.results import RateFit
from src.utils.logger import get_lab_logger, log_timing
from src.utils.validation import validate_finite, validate_positive, validate_positive_int

logger = get_lab_logger(__name__)

FloatArray = npt.NDArray[np.float64]

APPLY_RESIDUAL_TOL = 1e-10
SIGMA_TOL = 1e-6
SIGMA_MAXITER = 500
MIN_SCAN_SAMPLES = 10
DEFAULT_CAP_DIVISOR = 10.0
# undamped modes sit pi/2 apart; eight grid points per gap bracket every resonance
ENVELOPE_STEP = np.pi / 16.0
PEAK_XATOL = 1e-6


class ShiftedSystem:
    """LU factorization of S(omega) with forward and energy-adjoint resolvent solves."""

    def __init__(self, matrices: SystemMatrices, omega: float):
        self.matrices = matrices
        self.omega = validate_finite(omega, "omega")
        w = self.omega
        schur = combine((-(w**2), matrices.mass), (1j * w, matrices.damping),
                        (1.0, matrices.stiffness))
        try:
            self._lu = splu(schur.to_sparse().astype(np.complex128))
        except RuntimeError as e:
            raise SingularSystemError(w, str(e)) from e

    def solve(self, rhs: State) -> State:
        """(i omega - A)^-1 (f, g)."""
        m, d = self.matrices.mass, self.matrices.damping
        w = self.omega
        b = m.matvec(rhs.v + 1j * w * rhs.u) + d.matvec(rhs.u.astype(np.complex128))
        u = self._lu.solve(b)
        return State(u, 1j * w * u - rhs.u)

    def solve_adjoint(self, rhs: State) -> State:
        """Energy adjoint (-i omega - A#)^-1 (f, g), with A#(u, v) = (-v, M^-1 (K u - D v))."""
        m, d = self.matrices.mass, self.matrices.damping
        w = self.omega
        b = -(m.matvec(rhs.v + 1j * w * rhs.u) - d.matvec(rhs.u.astype(np.complex128)))
        u = self._lu.solve(b, trans="H")
        return State(u, rhs.u + 1j * w * u)

    def normal_apply(self, x: State) -> State:
        """R# R x; self-adjoint and positive in the energy inner product."""
        return self.solve_adjoint(self.solve(x))


def energy_norm(matrices: SystemMatrices, state: State) -> float:
    return float(np.sqrt(max(energy_inner(matrices, state, state).real, 0.0)))


def resolvent_apply(matrices: SystemMatrices, omega: float, f: np.ndarray, g: np.ndarray,
                    check: bool = True) -> State:
    """
    Solve (i omega - A)(u, v) = (f, g).

    With ``check`` the energy-norm residual is verified against
    1e-10 * ||(f, g)||_E.

    Raises:
        SingularSystemError: S(omega) is singular or the residual check fails
    """
    rhs = State(np.asarray(f, dtype=np.complex128), np.asarray(g, dtype=np.complex128))
    if rhs.u.shape[0] != matrices.n_dof:
        raise InvalidInputError("f", f"length {rhs.u.shape[0]} does not match n_dof={matrices.n_dof}")
    system = ShiftedSystem(matrices, omega)
    result = system.solve(rhs)
    if check:
        applied = result.scaled(1j * system.omega) - apply_generator(matrices, result)
        residual = energy_norm(matrices, applied - rhs)
        bound = APPLY_RESIDUAL_TOL * energy_norm(matrices, rhs)
        if residual > bound:
            raise SingularSystemError(system.omega, f"residual {residual:.3e} exceeds {bound:.3e}")
    return result


def _random_state(n_dof: int, seed: int) -> State:
    rng = np.random.default_rng(seed)
    return State(rng.standard_normal(n_dof).astype(np.complex128),
                 rng.standard_normal(n_dof).astype(np.complex128))


def sigma_min(
    matrices: SystemMatrices,
    omega: float,
    seed: int = 0,
    tol: float = SIGMA_TOL,
    maxiter: int = SIGMA_MAXITER,
) -> float:
    """
    Smallest energy-norm singular value of i omega - A.

    Lanczos iteration with full reorthogonalization on R# R, R the resolvent,
    in the energy inner product. The largest Ritz value approximates
    ||R||^2 = 1 / sigma_min^2; iteration stops when successive estimates differ
    by less than ``tol`` relative.

    Raises:
        ConvergenceError: No convergence within ``maxiter`` iterations
    """
    w = validate_finite(omega, "omega")
    if w < 0.0:
        raise InvalidInputError("omega", "must be >= 0")
    limit = validate_positive_int(maxiter, "maxiter")
    system = ShiftedSystem(matrices, w)
    dimension = 2 * matrices.n_dof

    q = _random_state(matrices.n_dof, seed)
    q = q.scaled(1.0 / energy_norm(matrices, q))
    basis: List[State] = [q]
    alphas: List[float] = []
    betas: List[float] = []
    estimate = 0.0

    for iteration in range(1, limit + 1):
        z = system.normal_apply(basis[-1])
        alphas.append(energy_inner(matrices, basis[-1], z).real)
        for previous in basis:
            z = z - previous.scaled(energy_inner(matrices, previous, z))
        beta = energy_norm(matrices, z)

        tridiagonal = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        new_estimate = float(np.linalg.eigvalsh(tridiagonal)[-1])
        exhausted = len(basis) >= dimension or beta <= 1e-14 * abs(new_estimate)
        if exhausted or (estimate > 0.0 and abs(new_estimate - estimate) < tol * new_estimate):
            logger.debug("sigma_min converged", omega=w, iterations=iteration)
            return 1.0 / np.sqrt(new_estimate)
        estimate = new_estimate
        betas.append(beta)
        basis.append(z.scaled(1.0 / beta))

    raise ConvergenceError("sigma_min", limit, last_estimate=1.0 / np.sqrt(estimate))


def omega_cap(matrices: SystemMatrices, cap_divisor: float = DEFAULT_CAP_DIVISOR) -> float:
    """Largest frequency the mesh resolves: n_elements / cap_divisor."""
    return matrices.n_elements / validate_positive(cap_divisor, "cap_divisor")


@dataclass(frozen=True)
class ResolventScan:
    """sigma_min sampled along the imaginary axis."""

    omegas: FloatArray
    sigma_min: FloatArray
    alpha: float
    n_dof: int
    n_elements: int
    omega_cap: float
    # frequency range searched; defaults to the first and last sample
    span: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if self.omegas.shape != self.sigma_min.shape:
            raise InvalidInputError("scan", "omegas and sigma_min differ in length")
        if np.any(np.diff(self.omegas) <= 0.0):
            raise InvalidInputError("scan", "omegas must be strictly increasing")
        if np.any(self.sigma_min <= 0.0):
            raise InvalidInputError("scan", "sigma_min must be positive")
        if self.span is None:
            if self.omegas.shape[0] == 0:
                raise InvalidInputError("scan", "an empty scan needs an explicit span")
            object.__setattr__(self, "span", (float(self.omegas[0]), float(self.omegas[-1])))

    @property
    def searched_range(self) -> Tuple[float, float]:
        assert self.span is not None
        return self.span

    @property
    def resolvent_norm(self) -> FloatArray:
        return 1.0 / self.sigma_min

    def window(self, omega_lo: float, omega_hi: float) -> npt.NDArray[np.bool_]:
        return (self.omegas >= omega_lo) & (self.omegas <= omega_hi)


def frequency_grid(omega_min: float, omega_max: float, points: int,
                   spacing: Union[Spacing, str] = Spacing.LOG) -> FloatArray:
    count = validate_positive_int(points, "points")
    if count == 1:
        return np.array([omega_min])
    if Spacing(spacing) is Spacing.LOG:
        grid = np.geomspace(omega_min, omega_max, count)
    else:
        grid = np.linspace(omega_min, omega_max, count)
    grid[0], grid[-1] = omega_min, omega_max
    return grid


@log_timing("resolvent_scan")
def scan(
    matrices: SystemMatrices,
    omega_min: float,
    omega_max: float,
    points: int,
    spacing: Union[Spacing, str] = Spacing.LOG,
    cap_divisor: float = DEFAULT_CAP_DIVISOR,
    threads: Optional[int] = None,
    seed: int = 0,
) -> ResolventScan:
    """
    sigma_min on a grid of frequencies in [omega_min, omega_max].

    Grid points are evaluated concurrently against the shared matrices; each
    point uses the same start-vector seed, so the result does not depend on
    scheduling.

    Raises:
        ResolutionCapError: omega_max above the mesh resolution cap
    """
    lo = validate_positive(omega_min, "omega_min")
    hi = validate_positive(omega_max, "omega_max")
    if lo >= hi:
        raise InvalidInputError("omega_min", "must be < omega_max")
    cap = omega_cap(matrices, cap_divisor)
    if hi > cap:
        raise ResolutionCapError(hi, cap)

    grid = frequency_grid(lo, hi, points, spacing)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        values = list(pool.map(lambda w: sigma_min(matrices, w, seed=seed), grid))

    logger.info("Resolvent scan finished", points=int(grid.shape[0]), omega_cap=cap)
    return ResolventScan(omegas=grid, sigma_min=np.array(values), alpha=matrices.alpha,
                         n_dof=matrices.n_dof, n_elements=matrices.n_elements, omega_cap=cap)


def _refine_minimum(matrices: SystemMatrices, left: float, right: float,
                    seed: int) -> Tuple[float, float]:
    result = minimize_scalar(lambda w: sigma_min(matrices, w, seed=seed), bounds=(left, right),
                             method="bounded", options={"xatol": PEAK_XATOL})
    return float(result.x), float(result.fun)


@log_timing("resolvent_envelope")
def envelope_scan(
    matrices: SystemMatrices,
    omega_min: float,
    omega_max: float,
    step: float = ENVELOPE_STEP,
    cap_divisor: float = DEFAULT_CAP_DIVISOR,
    threads: Optional[int] = None,
    seed: int = 0,
) -> ResolventScan:
    """
    Local minima of sigma_min in [omega_min, omega_max], one per resonance.

    ||R(i omega)|| peaks near Im lambda of every weakly damped eigenvalue and
    drops between them, so a fixed coarse grid samples the valleys. Here a grid
    with spacing ``step`` brackets each interior minimum, which is then located
    by bounded scalar minimization. The returned scan holds the minima only,
    with ``span`` set to the searched range, so fit_theta reads the growth
    envelope.

    Raises:
        ResolutionCapError: omega_max above the mesh resolution cap
    """
    lo = validate_positive(omega_min, "omega_min")
    hi = validate_positive(omega_max, "omega_max")
    if lo >= hi:
        raise InvalidInputError("omega_min", "must be < omega_max")
    width = validate_positive(step, "step")
    cap = omega_cap(matrices, cap_divisor)
    if hi > cap:
        raise ResolutionCapError(hi, cap)

    grid = np.linspace(lo, hi, max(int(np.ceil((hi - lo) / width)), 2) + 1)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        coarse = np.array(list(pool.map(lambda w: sigma_min(matrices, w, seed=seed), grid)))
        minima, _ = find_peaks(-np.log(coarse))
        refined = list(pool.map(
            lambda i: _refine_minimum(matrices, float(grid[i - 1]), float(grid[i + 1]), seed),
            minima,
        ))

    omegas = np.array([w for w, _ in refined], dtype=float)
    sigmas = np.array([s for _, s in refined], dtype=float)
    order = np.argsort(omegas)
    omegas, sigmas = omegas[order], sigmas[order]
    keep = np.concatenate(([True], np.diff(omegas) > 0.0)) if omegas.size else np.zeros(0, bool)

    logger.info("Resolvent envelope finished", grid_points=int(grid.shape[0]),
                minima=int(np.count_nonzero(keep)), omega_cap=cap)
    return ResolventScan(omegas=omegas[keep], sigma_min=sigmas[keep], alpha=matrices.alpha,
                         n_dof=matrices.n_dof, n_elements=matrices.n_elements, omega_cap=cap,
                         span=(lo, hi))


def _window_samples(scan_result: ResolventScan, omega_lo: float,
                    omega_hi: float) -> Tuple[FloatArray, FloatArray]:
    lo = validate_positive(omega_lo, "omega_lo")
    hi = validate_positive(omega_hi, "omega_hi")
    if lo >= hi:
        raise InvalidInputError("omega_lo", "must be < omega_hi")
    mask = scan_result.window(lo, hi)
    return scan_result.omegas[mask], scan_result.sigma_min[mask]


def fit_theta(scan_result: ResolventScan, omega_lo: float, omega_hi: float) -> RateFit:
    """
    Slope of log(1/sigma_min) against log(omega) over the window.

    Raises:
        InvalidInputError: Window outside the scanned range
        WindowTooSmallError: Fewer than 10 samples in the window
    """
    omegas, sigmas = _window_samples(scan_result, omega_lo, omega_hi)
    first, last = scan_result.searched_range
    if omega_lo < first * (1.0 - 1e-12) or omega_hi > last * (1.0 + 1e-12):
        raise InvalidInputError("window", f"must lie within the scanned range [{first:g}, {last:g}]")
    if omegas.shape[0] < MIN_SCAN_SAMPLES:
        raise WindowTooSmallError((omega_lo, omega_hi), int(omegas.shape[0]), MIN_SCAN_SAMPLES)

    coeffs, residuals, *_ = np.polyfit(np.log(omegas), -np.log(sigmas), 1, full=True)
    slope = float(coeffs[0])
    return RateFit(
        slope=slope,
        intercept=float(coeffs[1]),
        residual=max(float(residuals[0]) if residuals.size else 0.0, 0.0),
        window=(float(omega_lo), float(omega_hi)),
        r_lower=float(np.min(omegas**slope * sigmas)),
        n_samples=int(omegas.shape[0]),
    )


def lower_bound_constant(scan_result: ResolventScan, theta: float,
                         omega_lo: Optional[float] = None,
                         omega_hi: Optional[float] = None) -> float:
    """min over the window of omega^theta * sigma_min (whole scan by default)."""
    lo = scan_result.searched_range[0] if omega_lo is None else omega_lo
    hi = scan_result.searched_range[1] if omega_hi is None else omega_hi
    omegas, sigmas = _window_samples(scan_result, lo, hi)
    if omegas.shape[0] == 0:
        raise WindowTooSmallError((lo, hi), 0, 1)
    return float(np.min(omegas**theta * sigmas))


def write_scan_csv(scan_result: ResolventScan, path: Union[str, Path]) -> Path:
    return write_csv(
        path,
        ["omega", "sigma_min", "resolvent_norm"],
        zip(scan_result.omegas, scan_result.sigma_min, scan_result.resolvent_norm),
    )


def fit_report(scan_result: ResolventScan, fit: RateFit) -> Dict[str, Any]:
    """Payload of the fit JSON artifact."""
    return {
        "alpha": scan_result.alpha,
        "n_elements": scan_result.n_elements,
        "theta_fit": fit.slope,
        "theta_predicted": predict_rates(scan_result.alpha).theta,
        "r_lower": fit.r_lower,
        "window": list(fit.window),
        "residual": fit.residual,
    }


__all__ = [
    "ResolventScan",
    "ShiftedSystem",
    "energy_norm",
    "envelope_scan",
    "fit_report",
    "fit_theta",
    "frequency_grid",
    "lower_bound_constant",
    "omega_cap",
    "resolvent_apply",
    "scan",
    "sigma_min",
    "write_scan_csv",
]
