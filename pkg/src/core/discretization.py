"""
Piecewise-linear finite elements for the damped string on [-1, 1].

The mesh always contains x = 0 as a node, so the damped region (0, 1] is a union
of whole elements and the damping form is integrated exactly by the power rule.
Dirichlet conditions are imposed by dropping the two boundary nodes.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.linalg import cho_solve_banded, cholesky_banded

from src.middleware.artifact_formatter import atomic_writer
from src.middleware.error_handler import InvalidInputError
from src.models.rates import DampingProfile
from src.utils.logger import get_lab_logger, log_timing
from src.utils.quadrature import power_integral
from src.utils.validation import validate_even, validate_finite, validate_vector

logger = get_lab_logger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix stored by its diagonal and off-diagonal."""

    diag: FloatArray
    off: FloatArray

    def __post_init__(self) -> None:
        if self.off.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise InvalidInputError("off", "off-diagonal length must be len(diag) - 1")

    @property
    def size(self) -> int:
        return int(self.diag.shape[0])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Product with a real or complex vector."""
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def quadratic_form(self, x: np.ndarray) -> float:
        """Real part of x^H T x."""
        return float(np.real(np.vdot(x, self.matvec(x))))

    def scaled(self, factor: float) -> "Tridiagonal":
        return Tridiagonal(self.diag * factor, self.off * factor)

    def to_sparse(self) -> sp.csc_matrix:
        return sp.diags([self.off, self.diag, self.off], [-1, 0, 1],
                        shape=(self.size, self.size), format="csc")

    def to_dense(self) -> FloatArray:
        return np.asarray(self.to_sparse().toarray())

    def upper_banded(self) -> FloatArray:
        """LAPACK upper band storage (2, n) for banded Cholesky."""
        ab = np.zeros((2, self.size), dtype=self.diag.dtype)
        ab[0, 1:] = self.off
        ab[1, :] = self.diag
        return ab

    def norm_inf(self) -> float:
        """Infinity norm (max absolute row sum)."""
        rows = np.abs(self.diag).copy()
        rows[:-1] += np.abs(self.off)
        rows[1:] += np.abs(self.off)
        return float(rows.max()) if rows.size else 0.0


def combine(*terms: Tuple[complex, Tridiagonal]) -> Tridiagonal:
    """Linear combination sum(c_i * T_i) of tridiagonal matrices."""
    coeff, first = terms[0]
    diag = coeff * first.diag
    off = coeff * first.off
    for coeff, term in terms[1:]:
        diag = diag + coeff * term.diag
        off = off + coeff * term.off
    return Tridiagonal(diag, off)


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing nodes on [-1, 1] with 0 as an exact node."""

    nodes: FloatArray
    grading: float = 1.0

    def __post_init__(self) -> None:
        nodes = self.nodes
        if nodes.ndim != 1 or nodes.shape[0] < 3:
            raise InvalidInputError("nodes", "need at least three nodes")
        if nodes[0] != -1.0 or nodes[-1] != 1.0:
            raise InvalidInputError("nodes", "mesh must span [-1, 1]")
        if np.any(np.diff(nodes) <= 0.0):
            raise InvalidInputError("nodes", "nodes must be strictly increasing")
        if not np.any(nodes == 0.0):
            raise InvalidInputError("nodes", "x=0 must be a mesh node")

    @property
    def n_elements(self) -> int:
        return int(self.nodes.shape[0] - 1)

    @property
    def interior(self) -> FloatArray:
        return self.nodes[1:-1]

    @property
    def sizes(self) -> FloatArray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class SystemMatrices:
    """Mass, stiffness and damping matrices on the interior degrees of freedom."""

    mass: Tridiagonal
    stiffness: Tridiagonal
    damping: Tridiagonal
    alpha: float
    nodes: FloatArray

    @property
    def n_dof(self) -> int:
        return self.mass.size

    @property
    def n_elements(self) -> int:
        return int(self.nodes.shape[0] - 1)

    def with_damping_scale(self, factor: float) -> "SystemMatrices":
        """Same system with D replaced by factor * D."""
        return SystemMatrices(self.mass, self.stiffness, self.damping.scaled(factor),
                              self.alpha, self.nodes)


@dataclass(frozen=True)
class State:
    """Displacement and velocity coefficients (real or complex)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise InvalidInputError("state", "u and v must be vectors of equal length")

    @classmethod
    def zeros(cls, n_dof: int, dtype: type = float) -> "State":
        return cls(np.zeros(n_dof, dtype=dtype), np.zeros(n_dof, dtype=dtype))

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "State":
        """Split a stacked (u, v) vector."""
        n = x.shape[0] // 2
        return cls(x[:n].copy(), x[n:].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    def scaled(self, factor: complex) -> "State":
        return State(self.u * factor, self.v * factor)

    def __add__(self, other: "State") -> "State":
        return State(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "State") -> "State":
        return State(self.u - other.u, self.v - other.v)


def build_mesh(n_elements: int, grading: float = 1.0) -> Mesh:
    """
    Mesh with n/2 uniform elements on [-1, 0] and n/2 elements on [0, 1].

    On (0, 1] the nodes are x_j = (j / (n/2))**grading, so grading > 1 shrinks
    elements geometrically toward the degeneracy at 0.
    """
    n = validate_even(n_elements, "n_elements")
    g = validate_finite(grading, "grading")
    if g < 1.0:
        raise InvalidInputError("grading", "must be >= 1")
    half = n // 2
    left = np.linspace(-1.0, 0.0, half + 1)
    right = (np.arange(1, half + 1) / half) ** g
    nodes = np.concatenate([left, right])
    nodes[half] = 0.0
    nodes[-1] = 1.0
    return Mesh(nodes=nodes, grading=g)


def element_damping_integral(a: float, b: float, alpha: float) -> float:
    """Exact integral of the damping coefficient over [a, b]."""
    lo = validate_finite(a, "a")
    hi = validate_finite(b, "b")
    if lo >= hi:
        raise InvalidInputError("a", "element requires a < b")
    if lo < -1.0 or hi > 1.0:
        raise InvalidInputError("a", "element must lie in [-1, 1]")
    return float(_damping_integrals(np.array([lo]), np.array([hi]), alpha)[0])


def _damping_integrals(a: FloatArray, b: FloatArray, alpha: float) -> FloatArray:
    """Vectorized element integrals of b(x); zero on elements inside [-1, 0]."""
    lo = np.maximum(a, 0.0)
    hi = np.maximum(b, 0.0)
    return np.asarray(power_integral(lo, hi, alpha), dtype=float)


def _assemble_tridiagonal(full_diag: FloatArray, full_off: FloatArray) -> Tridiagonal:
    """Drop boundary rows/columns of a global tridiagonal matrix."""
    return Tridiagonal(full_diag[1:-1].copy(), full_off[1:-1].copy())


@log_timing("assemble")
def assemble(mesh: Mesh, profile: DampingProfile) -> SystemMatrices:
    """
    Assemble M, K, D with piecewise-linear hat functions.

    Local matrices per element of size h:
    K_e = (1/h)[[1,-1],[-1,1]], M_e = (h/6)[[2,1],[1,2]],
    D_e = (int_e b / h^2)[[1,-1],[-1,1]] (phi' is constant on each element).
    """
    nodes = mesh.nodes
    h = np.diff(nodes)
    n_nodes = nodes.shape[0]

    def scatter(local_diag: FloatArray, local_off: FloatArray) -> Tridiagonal:
        diag = np.zeros(n_nodes)
        diag[:-1] += local_diag
        diag[1:] += local_diag
        return _assemble_tridiagonal(diag, local_off)

    stiffness = scatter(1.0 / h, -1.0 / h)
    mass = scatter(h / 3.0, h / 6.0)
    c = _damping_integrals(nodes[:-1], nodes[1:], profile.alpha) / h**2
    damping = scatter(c, -c)

    logger.debug("Assembled system", n_dof=stiffness.size, alpha=profile.alpha)
    return SystemMatrices(mass=mass, stiffness=stiffness, damping=damping,
                          alpha=profile.alpha, nodes=nodes.copy())


class MassSolver:
    """Cached Cholesky factorization of the mass matrix."""

    def __init__(self, mass: Tridiagonal):
        self._factor = cholesky_banded(mass.upper_banded(), lower=False)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(rhs):
            return (cho_solve_banded((self._factor, False), rhs.real)
                    + 1j * cho_solve_banded((self._factor, False), rhs.imag))
        return cho_solve_banded((self._factor, False), rhs)


def _check_state(matrices: SystemMatrices, state: State) -> None:
    if state.u.shape[0] != matrices.n_dof:
        raise InvalidInputError(
            "state", f"length {state.u.shape[0]} does not match n_dof={matrices.n_dof}"
        )


def apply_generator(matrices: SystemMatrices, state: State,
                    mass_solver: Optional[MassSolver] = None) -> State:
    """A(u, v) = (v, w) with M w = -(K u + D v)."""
    _check_state(matrices, state)
    solver = mass_solver or MassSolver(matrices.mass)
    rhs = -(matrices.stiffness.matvec(state.u) + matrices.damping.matvec(state.v))
    return State(state.v.copy(), solver.solve(rhs))


def energy_inner(matrices: SystemMatrices, a: State, b: State) -> complex:
    """Energy inner product a_u^H K b_u + a_v^H M b_v."""
    _check_state(matrices, a)
    _check_state(matrices, b)
    return complex(
        np.vdot(a.u, matrices.stiffness.matvec(b.u)) + np.vdot(a.v, matrices.mass.matvec(b.v))
    )


def energy(matrices: SystemMatrices, state: State) -> float:
    """Discrete energy u^T K u + v^T M v (squared energy norm)."""
    _check_state(matrices, state)
    return matrices.stiffness.quadratic_form(state.u) + matrices.mass.quadratic_form(state.v)


def dissipation_rate(matrices: SystemMatrices, state: State) -> float:
    """v^T D v, the damping form; energy decreases at twice this rate."""
    _check_state(matrices, state)
    return matrices.damping.quadratic_form(state.v)


def interpolate(mesh: Mesh, f: Callable[[FloatArray], FloatArray]) -> FloatArray:
    """Interior nodal values of f."""
    values = np.asarray(f(mesh.interior), dtype=float)
    return validate_vector(values, "interpolant", mesh.interior.shape[0])


def dump_matrices(matrices: SystemMatrices, directory: Union[str, Path]) -> None:
    """Write mass.txt, stiffness.txt and damping.txt as ``row col value`` lines."""
    target = Path(directory)
    for name, matrix in (("mass", matrices.mass), ("stiffness", matrices.stiffness),
                         ("damping", matrices.damping)):
        coo = sp.coo_matrix(matrix.to_sparse())
        order = np.lexsort((coo.col, coo.row))
        lines = [f"# n_dof={matrices.n_dof}"]
        for k in order:
            if coo.data[k] != 0.0:
                lines.append(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17e}")
        with atomic_writer(target / f"{name}.txt") as handle:
            handle.write("\n".join(lines) + "\n")

