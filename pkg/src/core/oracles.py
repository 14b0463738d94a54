"""
Dense reference computations for small systems.

Each oracle rebuilds its quantity by a route independent of the production
code path (dense inverses, matrix exponential, SVD, adaptive quadrature) and
is meant for n_dof in the tens.
"""

import numpy as np
import numpy.typing as npt
from scipy.integrate import quad
from scipy.linalg import block_diag, cholesky, expm, solve, solve_triangular, svdvals

from src.core.discretization import Mesh, State, SystemMatrices
from src.utils.logger import get_logger

logger = get_logger(__name__)

FloatArray = npt.NDArray[np.float64]

MAX_ORACLE_DOF = 256


def _check_size(matrices: SystemMatrices) -> None:
    if matrices.n_dof > MAX_ORACLE_DOF:
        logger.warning(f"Dense oracle on n_dof={matrices.n_dof}; this is slow")


def dense_generator(matrices: SystemMatrices) -> FloatArray:
    """A = [[0, I], [-M^-1 K, -M^-1 D]] as a dense matrix."""
    _check_size(matrices)
    n = matrices.n_dof
    mass = matrices.mass.to_dense()
    lower = -solve(mass, np.hstack([matrices.stiffness.to_dense(), matrices.damping.to_dense()]),
                   assume_a="pos")
    top = np.hstack([np.zeros((n, n)), np.eye(n)])
    return np.vstack([top, lower])


def energy_weight_factor(matrices: SystemMatrices) -> FloatArray:
    """Lower Cholesky factor L of blockdiag(K, M), so ||x||_E = ||L^T x||."""
    weight = block_diag(matrices.stiffness.to_dense(), matrices.mass.to_dense())
    return cholesky(weight, lower=True)


def expm_trajectory(matrices: SystemMatrices, initial: State, t: float) -> State:
    """e^{tA} U0."""
    generator = dense_generator(matrices)
    return State.from_vector(expm(t * generator) @ initial.to_vector())


def dense_sigma_min(matrices: SystemMatrices, omega: float) -> float:
    """Smallest singular value of L^T (i omega - A) L^-T."""
    generator = dense_generator(matrices)
    factor = energy_weight_factor(matrices)
    shifted = 1j * omega * np.eye(generator.shape[0]) - generator
    # B = L^T T L^-T, formed as (L^-1 (L^T T)^T)^T
    left = factor.T @ shifted
    weighted = solve_triangular(factor, left.T, lower=True).T
    return float(svdvals(weighted).min())


def dense_resolvent(matrices: SystemMatrices, omega: float, rhs: State) -> State:
    """(i omega - A)^-1 F by a dense complex solve."""
    generator = dense_generator(matrices)
    shifted = 1j * omega * np.eye(generator.shape[0]) - generator
    return State.from_vector(solve(shifted, rhs.to_vector().astype(np.complex128)))


def quad_damping_matrix(mesh: Mesh, alpha: float) -> FloatArray:
    """Damping matrix on the interior nodes from adaptive quadrature of x^alpha."""
    nodes = mesh.nodes
    n_nodes = nodes.shape[0]
    full = np.zeros((n_nodes, n_nodes))
    for e in range(n_nodes - 1):
        a, b = nodes[e], nodes[e + 1]
        if b <= 0.0:
            continue
        value, _ = quad(lambda x: np.power(max(x, 0.0), alpha), a, b,
                        points=[0.0] if a < 0.0 < b else None, epsabs=0.0, epsrel=1e-13, limit=200)
        c = value / (b - a) ** 2
        full[e, e] += c
        full[e + 1, e + 1] += c
        full[e, e + 1] -= c
        full[e + 1, e] -= c
    return full[1:-1, 1:-1]
