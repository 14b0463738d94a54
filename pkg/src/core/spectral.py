"""
Eigenvalues of the discrete generator through the quadratic pencil
lambda^2 M + lambda D + K.

The pencil is linearized to the companion pair
A_lin = [[0, I], [-K, -D]], B_lin = [[I, 0], [0, M]] after rescaling
lambda = gamma * mu with gamma = sqrt(||K|| / ||M||). Every eigenpair is
certified by its residual on the unscaled pencil.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.linalg import eig
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from src.core.discretization import SystemMatrices, assemble, build_mesh
from src.core.model import make_profile
from src.middleware.artifact_formatter import write_csv
from src.middleware.error_handler import BranchAmbiguityError, ConvergenceError, InvalidInputError
from src.models.config import SpectrumMode
from src.utils.logger import get_lab_logger, log_timing
from src.utils.validation import validate_alpha, validate_positive_int

logger = get_lab_logger(__name__)

ComplexArray = npt.NDArray[np.complex128]

DISSIPATIVITY_TOL = 1e-10
RESIDUAL_TOL = 1e-8
AMBIGUITY_TOL = 1e-6


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of one discretization, sorted by imaginary part."""

    eigenvalues: ComplexArray
    residuals: npt.NDArray[np.float64]
    n_dof: int
    mode: SpectrumMode = SpectrumMode.DENSE

    @property
    def abscissa(self) -> float:
        """max Re(lambda)."""
        return float(np.max(self.eigenvalues.real))

    @property
    def axis_gap(self) -> float:
        """min |Re(lambda)|, the distance of the spectrum to the imaginary axis."""
        return float(np.min(np.abs(self.eigenvalues.real)))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def is_dissipative(self, tol: float = DISSIPATIVITY_TOL) -> bool:
        scale = float(np.max(np.abs(self.eigenvalues)))
        return self.abscissa <= tol * scale

    def upper_half(self) -> ComplexArray:
        """Eigenvalues with Im > 0 in order of increasing imaginary part."""
        upper = self.eigenvalues[self.eigenvalues.imag > 0.0]
        return upper[np.argsort(upper.imag, kind="stable")]


@dataclass(frozen=True)
class BranchPoint:
    """One entry of the branch table."""

    alpha: float
    k: int
    eigenvalue: complex


def pencil_scale(matrices: SystemMatrices) -> float:
    """gamma = sqrt(||K||_inf / ||M||_inf)."""
    norm_m = matrices.mass.norm_inf()
    norm_k = matrices.stiffness.norm_inf()
    if norm_m == 0.0 or norm_k == 0.0:
        return 1.0
    return float(np.sqrt(norm_k / norm_m))


def linearize_pencil(matrices: SystemMatrices,
                     gamma: float = 1.0) -> Tuple[sp.csc_matrix, sp.csc_matrix]:
    """
    Companion pair for mu^2 M + mu (D/gamma) + K/gamma^2.

    With ``gamma = 1`` this is the plain pair whose eigenvalues are the pencil
    roots; otherwise the roots are gamma times the eigenvalues of the pair.
    """
    if gamma <= 0.0:
        raise InvalidInputError("gamma", "must be positive")
    n = matrices.n_dof
    identity = sp.identity(n, format="csc")
    stiffness = matrices.stiffness.to_sparse() / gamma**2
    damping = matrices.damping.to_sparse() / gamma
    a_lin = sp.bmat([[None, identity], [-stiffness, -damping]], format="csc")
    b_lin = sp.bmat([[identity, None], [None, matrices.mass.to_sparse()]], format="csc")
    return a_lin, b_lin


def pencil_residuals(matrices: SystemMatrices, eigenvalues: ComplexArray,
                     vectors: ComplexArray) -> npt.NDArray[np.float64]:
    """
    Relative residuals ||(l^2 M + l D + K) x|| / (||x|| (|l|^2 ||M|| + |l| ||D|| + ||K||)).

    ``vectors`` holds one displacement vector per column.
    """
    norm_m = matrices.mass.norm_inf()
    norm_d = matrices.damping.norm_inf()
    norm_k = matrices.stiffness.norm_inf()
    out = np.empty(eigenvalues.shape[0])
    for j, lam in enumerate(eigenvalues):
        x = vectors[:, j]
        r = (lam**2 * matrices.mass.matvec(x) + lam * matrices.damping.matvec(x)
             + matrices.stiffness.matvec(x))
        scale = abs(lam) ** 2 * norm_m + abs(lam) * norm_d + norm_k
        out[j] = np.linalg.norm(r) / (np.linalg.norm(x) * scale)
    return out


def _dense_eigenpairs(matrices: SystemMatrices, gamma: float) -> Tuple[ComplexArray, ComplexArray]:
    a_lin, b_lin = linearize_pencil(matrices, gamma)
    mu, vectors = eig(a_lin.toarray(), b_lin.toarray())
    keep = np.isfinite(mu)
    return gamma * mu[keep], vectors[: matrices.n_dof, keep]


def _shift_invert_eigenpairs(matrices: SystemMatrices, gamma: float, shifts: Sequence[float],
                             k_per_shift: int) -> Tuple[ComplexArray, ComplexArray]:
    a_lin, b_lin = linearize_pencil(matrices, gamma)
    a_lin = a_lin.astype(np.complex128)
    b_lin = b_lin.astype(np.complex128)
    k = min(k_per_shift, 2 * matrices.n_dof - 2)
    values: List[ComplexArray] = []
    vectors: List[ComplexArray] = []
    for shift in shifts:
        sigma = 1j * shift / gamma
        try:
            mu, vecs = eigs(a_lin, k=k, M=b_lin, sigma=sigma, which="LM")
        except (ArpackNoConvergence, ArpackError) as e:
            raise ConvergenceError("shift-invert eigensolver", iterations=-1,
                                   shift=complex(1j * shift)) from e
        values.append(gamma * mu)
        vectors.append(vecs[: matrices.n_dof])

    lam = np.concatenate(values)
    x = np.concatenate(vectors, axis=1)
    # add conjugates, then merge duplicates found from neighbouring shifts
    lam = np.concatenate([lam, lam.conj()])
    x = np.concatenate([x, x.conj()], axis=1)
    order = np.lexsort((lam.real, lam.imag))
    lam, x = lam[order], x[:, order]
    tol = 1e-8 * max(float(np.max(np.abs(lam))), 1.0)
    keep = [0]
    for j in range(1, lam.shape[0]):
        if np.min(np.abs(lam[keep] - lam[j])) > tol:
            keep.append(j)
    return lam[keep], x[:, keep]


@log_timing("compute_spectrum")
def compute_spectrum(
    matrices: SystemMatrices,
    mode: Union[SpectrumMode, str] = SpectrumMode.DENSE,
    shifts: Optional[Sequence[float]] = None,
    k_per_shift: int = 20,
) -> SpectrumResult:
    """
    Eigenvalues of the generator with residual certificates.

    Args:
        matrices: Assembled system
        mode: ``dense`` for a full QZ solve, ``shift_invert`` for ARPACK about
            ``i * shift`` for each entry of ``shifts`` (default: 0)
        k_per_shift: Eigenvalues requested per shift in shift-invert mode

    Raises:
        ConvergenceError: The iterative solver failed; carries the shift
    """
    solve_mode = SpectrumMode(mode)
    gamma = pencil_scale(matrices)
    if solve_mode is SpectrumMode.DENSE:
        lam, x = _dense_eigenpairs(matrices, gamma)
    else:
        count = validate_positive_int(k_per_shift, "k_per_shift")
        shift_list = [0.0] if shifts is None else [float(s) for s in shifts]
        lam, x = _shift_invert_eigenpairs(matrices, gamma, shift_list, count)

    order = np.lexsort((lam.real, lam.imag))
    lam, x = lam[order], x[:, order]
    residuals = pencil_residuals(matrices, lam, x)
    result = SpectrumResult(eigenvalues=lam, residuals=residuals, n_dof=matrices.n_dof,
                            mode=solve_mode)

    if result.max_residual > RESIDUAL_TOL:
        logger.warning("Eigenpair residual above tolerance", max_residual=result.max_residual)
    if not result.is_dissipative():
        logger.warning("Spectrum crosses the imaginary axis", abscissa=result.abscissa)
    logger.debug("Spectrum computed", n_eigenvalues=int(lam.shape[0]),
                 abscissa=result.abscissa, axis_gap=result.axis_gap)
    return result


def _match(previous: ComplexArray, candidates: ComplexArray, alpha: float) -> ComplexArray:
    """Assign each previous branch point its nearest candidate."""
    cost = np.abs(previous[:, None] - candidates[None, :])
    rows, cols = linear_sum_assignment(cost)
    for row in rows:
        distances = np.sort(cost[row])
        if distances.shape[0] > 1 and distances[1] - distances[0] < AMBIGUITY_TOL:
            raise BranchAmbiguityError(alpha, int(row) + 1, float(distances[1] - distances[0]))
    matched = np.empty_like(previous)
    matched[rows] = candidates[cols]
    return matched


def trace_branches(
    alphas: Iterable[float],
    n_elements: int,
    k_max: int,
    damping_scale: float = 1.0,
    grading: float = 1.0,
    threads: Optional[int] = None,
) -> List[BranchPoint]:
    """
    Follow the k_max lowest upper-half eigenvalues across a sequence of alphas.

    Spectra for the alphas are computed concurrently; branches are matched in
    the given order by minimum-distance assignment against the previous alpha.

    Raises:
        BranchAmbiguityError: Two candidates are equally close to a branch
    """
    alpha_list = [validate_alpha(a) for a in alphas]
    count = validate_positive_int(k_max, "k_max")
    mesh = build_mesh(n_elements, grading)

    def upper(alpha: float) -> ComplexArray:
        matrices = assemble(mesh, make_profile(alpha)).with_damping_scale(damping_scale)
        return compute_spectrum(matrices).upper_half()

    with ThreadPoolExecutor(max_workers=threads) as pool:
        spectra = list(pool.map(upper, alpha_list))

    points: List[BranchPoint] = []
    previous: Optional[ComplexArray] = None
    for alpha, candidates in zip(alpha_list, spectra):
        if candidates.shape[0] < count:
            raise InvalidInputError("k_max", f"only {candidates.shape[0]} oscillatory eigenvalues")
        if previous is None:
            current = candidates[:count]
        else:
            current = _match(previous, candidates[: 2 * count], alpha)
        points.extend(BranchPoint(alpha, k + 1, complex(lam)) for k, lam in enumerate(current))
        previous = current
    return points


def write_spectrum_csv(result: SpectrumResult, path: Union[str, Path]) -> Path:
    return write_csv(path, ["re", "im"], ((lam.real, lam.imag) for lam in result.eigenvalues))


def write_branches_csv(points: Sequence[BranchPoint], path: Union[str, Path]) -> Path:
    return write_csv(
        path,
        ["alpha", "k", "re", "im"],
        ((p.alpha, p.k, p.eigenvalue.real, p.eigenvalue.imag) for p in points),
    )
