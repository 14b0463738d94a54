"""
Time stepping of dU/dt = AU with the implicit midpoint rule.

Each step solves one SPD tridiagonal system with the Schur complement
S = (4/dt^2) M + (2/dt) D + K for the midpoint velocity, so the discrete energy
obeys E(U+) - E(U) = -2 dt v_mid^T D v_mid exactly (up to round-off).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from src.core.discretization import (
    Mesh,
    State,
    SystemMatrices,
    apply_generator,
    combine,
    energy,
    interpolate,
)
from src.middleware.artifact_formatter import write_csv
from src.middleware.error_handler import (
    EnergyFloorError,
    InvalidInputError,
    SolverBreakdownError,
    WindowTooSmallError,
)
from src.models.config import InitialDataKind
from src.models.results import DecayFit
from src.utils.logger import get_lab_logger, log_timing
from src.utils.validation import validate_finite, validate_positive, validate_positive_int

logger = get_lab_logger(__name__)

FloatArray = npt.NDArray[np.float64]

MIN_FIT_SAMPLES = 20
# energies below this fraction of E(0) are treated as round-off
ENERGY_FLOOR = 1e-13
# default windows end this many times above the floor
FLOOR_MARGIN = 1e3


@dataclass(frozen=True)
class EnergyTrace:
    """Sampled energy history of one simulation."""

    times: FloatArray
    energies: FloatArray
    dissipated: FloatArray
    alpha: float
    n_elements: int
    dt: float

    def __post_init__(self) -> None:
        if self.times.shape != self.energies.shape:
            raise InvalidInputError("trace", "times and energies differ in length")
        if np.any(np.diff(self.times) <= 0.0):
            raise InvalidInputError("trace", "times must be strictly increasing")
        if np.any(self.energies < 0.0):
            raise InvalidInputError("trace", "energies must be nonnegative")

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def is_monotone(self, slack: float = 1e-12) -> bool:
        """True if energy never rises above the running minimum by more than slack * E(0)."""
        if len(self) == 0:
            return True
        tolerance = slack * self.energies[0]
        running_min = np.minimum.accumulate(self.energies)
        return bool(np.all(self.energies <= running_min + tolerance))


class MidpointStepper:
    """
    Implicit midpoint integrator with a cached banded Cholesky factor.

    Negative ``dt`` integrates backward in time; the Schur complement is then
    positive definite only when the damping is weak enough, otherwise the
    factorization reports a breakdown.
    """

    def __init__(self, matrices: SystemMatrices, dt: float):
        step = validate_finite(dt, "dt")
        if step == 0.0:
            raise InvalidInputError("dt", "must be nonzero")
        self.matrices = matrices
        self.dt = step
        schur = combine(
            (4.0 / step**2, matrices.mass),
            (2.0 / step, matrices.damping),
            (1.0, matrices.stiffness),
        )
        try:
            self._factor = cholesky_banded(schur.upper_banded(), lower=False)
        except LinAlgError as e:
            raise SolverBreakdownError("midpoint step", f"Schur complement not SPD: {e}") from e

    def midpoint_velocity(self, state: State) -> FloatArray:
        """Solve S v_mid = (4/dt^2) M v - (2/dt) K u."""
        dt = self.dt
        rhs = (4.0 / dt**2) * self.matrices.mass.matvec(state.v) \
            - (2.0 / dt) * self.matrices.stiffness.matvec(state.u)
        return cho_solve_banded((self._factor, False), rhs)

    def advance(self, state: State) -> Tuple[State, float]:
        """One step; returns the new state and v_mid^T D v_mid."""
        v_mid = self.midpoint_velocity(state)
        new_state = State(state.u + self.dt * v_mid, 2.0 * v_mid - state.v)
        return new_state, self.matrices.damping.quadratic_form(v_mid)


def step(matrices: SystemMatrices, state: State, dt: float) -> State:
    """Solve (I - dt/2 A) U+ = (I + dt/2 A) U for one step of size dt > 0."""
    validate_positive(dt, "dt")
    new_state, _ = MidpointStepper(matrices, dt).advance(state)
    return new_state


def make_initial_data(
    mesh: Mesh,
    kind: Union[InitialDataKind, str],
    matrices: Optional[SystemMatrices] = None,
) -> State:
    """
    Initial data on the interior nodes.

    ``graph_normalized`` rescales the sine displacement so that
    E(U0) + E(AU0) = 1 and therefore needs the assembled matrices.
    """
    try:
        data_kind = InitialDataKind(kind)
    except ValueError:
        raise InvalidInputError("kind", f"unknown initial data kind {kind!r}")

    if data_kind is InitialDataKind.BUMP_VELOCITY:
        v = interpolate(mesh, lambda x: (1.0 - x**2) ** 2)
        return State(np.zeros_like(v), v)

    u = interpolate(mesh, lambda x: np.sin(np.pi * (x + 1.0) / 2.0))
    state = State(u, np.zeros_like(u))
    if data_kind is InitialDataKind.SINE_DISPLACEMENT:
        return state

    if matrices is None:
        raise InvalidInputError("matrices", "graph_normalized data needs assembled matrices")
    graph_energy = energy(matrices, state) + energy(matrices, apply_generator(matrices, state))
    return state.scaled(1.0 / np.sqrt(graph_energy))


@log_timing("simulate")
def simulate(
    matrices: SystemMatrices,
    initial: State,
    t_final: float,
    dt: float,
    sample_every: int = 1,
) -> EnergyTrace:
    """
    Integrate to t_final and sample the energy every ``sample_every`` steps.

    The sample at t = 0 is included; ``dissipated`` accumulates
    2 dt sum(v_mid^T D v_mid) up to each sample time.
    """
    t_end = validate_positive(t_final, "t_final")
    step_size = validate_positive(dt, "dt")
    every = validate_positive_int(sample_every, "sample_every")
    n_steps = max(int(round(t_end / step_size)), 1)

    stepper = MidpointStepper(matrices, step_size)
    n_samples = n_steps // every + 1
    times = np.empty(n_samples)
    energies = np.empty(n_samples)
    dissipated = np.empty(n_samples)
    times[0], energies[0], dissipated[0] = 0.0, energy(matrices, initial), 0.0

    state = initial
    total = 0.0
    sample = 1
    for k in range(1, n_steps + 1):
        state, rate = stepper.advance(state)
        total += 2.0 * step_size * rate
        if k % every == 0:
            times[sample] = k * step_size
            energies[sample] = energy(matrices, state)
            dissipated[sample] = total
            sample += 1

    logger.info("Simulation finished", steps=n_steps, final_energy=float(energies[-1]))
    return EnergyTrace(times=times, energies=energies, dissipated=dissipated,
                       alpha=matrices.alpha, n_elements=matrices.n_elements, dt=step_size)


def floor_time(trace: EnergyTrace, lo: float = 0.0, hi: float = np.inf,
               margin: float = 1.0) -> Optional[float]:
    """First sample time in [lo, hi] with energy at or below margin * ENERGY_FLOOR * E(0)."""
    threshold = margin * ENERGY_FLOOR * float(trace.energies[0])
    mask = (trace.times >= lo) & (trace.times <= hi) & (trace.energies <= threshold)
    hits = np.flatnonzero(mask)
    return float(trace.times[hits[0]]) if hits.size else None


def fit_decay_exponent(trace: EnergyTrace, t_lo: float, t_hi: float) -> DecayFit:
    """
    Least-squares slope of log(energy) against log(t) over [t_lo, t_hi].

    Raises:
        WindowTooSmallError: Fewer than 20 samples in the window
        EnergyFloorError: Energies inside the window at the round-off floor
    """
    lo = validate_positive(t_lo, "t_lo")
    hi = validate_positive(t_hi, "t_hi")
    if lo >= hi:
        raise InvalidInputError("t_lo", "must be < t_hi")

    mask = (trace.times >= lo) & (trace.times <= hi)
    window = (lo, hi)
    count = int(np.count_nonzero(mask))
    if count < MIN_FIT_SAMPLES:
        raise WindowTooSmallError(window, count, MIN_FIT_SAMPLES)
    values = trace.energies[mask]
    floor_at = floor_time(trace, lo, hi)
    if floor_at is not None or np.any(values <= 0.0):
        first = floor_at if floor_at is not None else float(trace.times[mask][values <= 0.0][0])
        above = int(np.count_nonzero(trace.times[mask] < first))
        raise EnergyFloorError(window, above, first)

    coeffs, residuals, *_ = np.polyfit(np.log(trace.times[mask]), np.log(values), 1, full=True)
    residual = float(residuals[0]) if residuals.size else 0.0
    return DecayFit(slope=float(coeffs[0]), intercept=float(coeffs[1]),
                    residual=max(residual, 0.0), window=window, n_samples=count)


def default_fit_window(trace: EnergyTrace, abscissa: Optional[float] = None) -> Tuple[float, float]:
    """
    Window [10, min(100, t_final, 0.5/|abscissa|, t_floor)] inside the polynomial regime.

    t_floor is the last sample whose energy stays FLOOR_MARGIN times above the
    round-off floor, so the default window never reaches it.
    """
    t_final = float(trace.times[-1])
    t_hi = min(100.0, t_final)
    if abscissa is not None and abscissa != 0.0:
        t_hi = min(t_hi, 0.5 / abs(abscissa))
    if trace.energies[0] > 0.0:
        reached = floor_time(trace, margin=FLOOR_MARGIN)
        if reached is not None:
            before = trace.times[trace.times < reached]
            t_hi = min(t_hi, float(before[-1]))
    t_lo = 10.0 if t_hi > 10.0 else float(trace.times[1]) if len(trace) > 1 else 0.0
    return t_lo, t_hi


def write_trace_csv(trace: EnergyTrace, path: Union[str, Path]) -> Path:
    """Write the ``t,energy`` CSV artifact."""
    return write_csv(path, ["t", "energy"], zip(trace.times, trace.energies))


__all__ = [
    "EnergyTrace",
    "MidpointStepper",
    "default_fit_window",
    "fit_decay_exponent",
    "floor_time",
    "make_initial_data",
    "simulate",
    "step",
    "write_trace_csv",
]
