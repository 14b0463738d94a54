"""Shared fixtures: small assembled systems and hand-built scalar pencils."""

import logging
from logging.handlers import RotatingFileHandler
from typing import Callable

import numpy as np
import pytest

from src.core.discretization import SystemMatrices, Tridiagonal, assemble, build_mesh
from src.core.model import make_profile


def _scalar(value: float) -> Tridiagonal:
    return Tridiagonal(np.array([float(value)]), np.array([], dtype=float))


@pytest.fixture
def scalar_system() -> Callable[[float, float, float], SystemMatrices]:
    """Factory for a one-dof system with given mass, stiffness and damping."""

    def build(mass: float, stiffness: float, damping: float) -> SystemMatrices:
        return SystemMatrices(
            mass=_scalar(mass),
            stiffness=_scalar(stiffness),
            damping=_scalar(damping),
            alpha=0.0,
            nodes=np.array([-1.0, 0.0, 1.0]),
        )

    return build


@pytest.fixture
def small_mesh():
    """Uniform mesh with 16 elements."""
    return build_mesh(16)


@pytest.fixture
def small_system(small_mesh):
    """Assembled system for alpha = 0.5 on the 16-element mesh."""
    return assemble(small_mesh, make_profile(0.5))


@pytest.fixture
def undamped_system(small_mesh):
    """The 16-element system with the damping switched off."""
    return assemble(small_mesh, make_profile(0.0)).with_damping_scale(0.0)


@pytest.fixture
def rng():
    """Deterministic generator for random test vectors."""
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def restore_root_logger():
    """Undo handler and level changes made by setup_logging."""
    root = logging.getLogger()
    level = root.level
    yield
    for handler in root.handlers[:]:
        if type(handler) in (logging.StreamHandler, RotatingFileHandler):
            handler.close()
            root.removeHandler(handler)
    root.setLevel(level)
