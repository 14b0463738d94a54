"""
Weighted Hardy inequality probes and the rate comparison table.

Hardy test functions are piecewise linear on (0, 1) with xi(1) = 0, and both
weighted integrals are evaluated exactly element by element. Sweep trials are
drawn once per (alpha, beta) pair as smooth functions and interpolated onto
each mesh, so the coarse and fine ratios compare the same functions.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from src.core.model import decay_regime, predict_rates
from src.middleware.artifact_formatter import write_csv
from src.middleware.error_handler import InvalidInputError
from src.models.rates import DecayRegime
from src.models.results import ComparisonRow, HardyCase, MeasuredRates
from src.utils.logger import get_lab_logger
from src.utils.quadrature import power_integral, weighted_linear_square_integral
from src.utils.validation import validate_finite, validate_positive_int, validate_vector

logger = get_lab_logger(__name__)

FloatArray = npt.NDArray[np.float64]

COARSE_ELEMENTS = 64
FINE_ELEMENTS = 512

TRIAL_FAMILIES = ("interpolated", "sine", "power", "bump")
COARSE_KNOTS = 9
SINE_MODES = 8
# 1 - x^p beats the witness at alpha = beta = 0 for 1 < p < 3.5
POWER_RANGE = (1.2, 3.0)
BUMP_RANGE = (0.05, 1.0)


def _check_hypotheses(alpha: float, beta: float) -> Tuple[float, float]:
    a = validate_finite(alpha, "alpha")
    b = validate_finite(beta, "beta")
    if a >= 1.0:
        raise InvalidInputError("alpha", "must be < 1")
    if b <= -1.0:
        raise InvalidInputError("beta", "must be > -1")
    return a, b


def hardy_ratio(nodes: FloatArray, values: FloatArray, alpha: float, beta: float) -> float:
    """
    int x^beta |xi|^2 / int x^alpha |xi'|^2 for piecewise-linear xi.

    Returns 0 for xi identically zero. A derivative integral that diverges at
    x = 0 (alpha <= -1 with a sloped first element) also gives 0.
    """
    a, b = _check_hypotheses(alpha, beta)
    x = validate_vector(np.asarray(nodes, dtype=float), "nodes")
    xi = validate_vector(np.asarray(values, dtype=float), "values", x.shape[0])
    if x.shape[0] < 2 or x[0] < 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0.0):
        raise InvalidInputError("nodes", "must increase strictly from >= 0 to 1")
    if xi[-1] != 0.0:
        raise InvalidInputError("values", "xi(1) must be 0")

    lo, hi = x[:-1], x[1:]
    numerator = float(np.sum(weighted_linear_square_integral(lo, hi, xi[:-1], xi[1:], b)))
    slopes = np.diff(xi) / np.diff(x)
    flat = slopes == 0.0
    weights = np.where(flat, 0.0, power_integral(np.where(flat, 0.5, lo), np.where(flat, 1.0, hi), a))
    denominator = float(np.sum(slopes**2 * weights))

    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return numerator / denominator


class Trial(NamedTuple):
    """A sweep test function: a family name and its random parameters."""

    family: str
    params: FloatArray

    def values(self, nodes: FloatArray, alpha: float) -> FloatArray:
        """Nodal values on ``nodes``; the first element is flat when alpha <= -1."""
        x = nodes
        if self.family == "witness":
            xi = 1.0 - x
        elif self.family == "interpolated":
            xi = np.interp(x, np.linspace(0.0, 1.0, self.params.shape[0]), self.params)
        elif self.family == "sine":
            modes = np.arange(1, self.params.shape[0] + 1)
            xi = np.sin(0.5 * np.pi * np.outer(1.0 - x, modes)) @ self.params
        elif self.family == "power":
            xi = 1.0 - x ** self.params[0]
        else:
            xi = (1.0 - x) * x ** self.params[0]
        if alpha <= -1.0:
            xi[0] = xi[1]
        return xi


def _draw_trials(rng: np.random.Generator, n_random: int) -> List[Trial]:
    """
    The witness 1 - x plus ``n_random`` smooth trials cycling through the families.

    interpolated: standard-normal values on COARSE_KNOTS equispaced knots
    sine: sum of c_k / k * sin(k pi (1 - x) / 2), k <= SINE_MODES
    power: 1 - x^p, flat near x = 0
    bump: (1 - x) x^s, peaked near x = 0
    """
    trials = [Trial("witness", np.zeros(0))]
    for i in range(n_random):
        family = TRIAL_FAMILIES[i % len(TRIAL_FAMILIES)]
        if family == "interpolated":
            params = rng.standard_normal(COARSE_KNOTS)
            params[-1] = 0.0
        elif family == "sine":
            params = rng.standard_normal(SINE_MODES) / np.arange(1, SINE_MODES + 1)
        elif family == "power":
            params = np.array([rng.uniform(*POWER_RANGE)])
        else:
            params = np.array([rng.uniform(*BUMP_RANGE)])
        trials.append(Trial(family, params))
    return trials


def _sweep_pair(alpha: float, beta: float, n_random: int, seed_seq: np.random.SeedSequence,
                coarse: int, fine: int) -> HardyCase:
    trials = _draw_trials(np.random.default_rng(seed_seq), n_random)
    ratios = []
    for n_elements in (coarse, fine):
        nodes = np.linspace(0.0, 1.0, n_elements + 1)
        ratios.append([hardy_ratio(nodes, t.values(nodes, alpha), alpha, beta) for t in trials])
    best = int(np.argmax(ratios[1]))
    return HardyCase(alpha=alpha, beta=beta, ratio_coarse=max(ratios[0]), ratio=ratios[1][best],
                     n_samples=n_random + 1, active_trial=trials[best].family)


def hardy_sweep(
    alphas: Sequence[float],
    betas: Sequence[float],
    n_random: int,
    seed: int = 0,
    coarse: int = COARSE_ELEMENTS,
    fine: int = FINE_ELEMENTS,
    threads: Optional[int] = None,
) -> List[HardyCase]:
    """
    Empirical Hardy constants for every (alpha, beta) pair.

    Each pair draws from its own generator spawned from ``seed``, so the
    result does not depend on how pairs are scheduled. ``n_random = 0`` gives
    an empty sweep.
    """
    count = validate_positive_int(n_random, "n_random", minimum=0)
    if count == 0:
        return []
    pairs = [_check_hypotheses(a, b) for a in alphas for b in betas]
    children = np.random.SeedSequence(seed).spawn(len(pairs))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        cases = list(pool.map(
            lambda job: _sweep_pair(job[0][0], job[0][1], count, job[1], coarse, fine),
            zip(pairs, children),
        ))
    logger.info("Hardy sweep finished", pairs=len(cases),
                max_growth=max((c.growth for c in cases), default=0.0))
    return cases


def hardy_divergence_probe(lower_limits: Iterable[float], alpha: float,
                           beta: float = -1.0) -> FloatArray:
    """
    Ratio for xi = 1 - x restricted to [eps, 1] for each eps.

    With beta = -1 the numerator grows like log(1/eps), so the ratio exceeds
    any bound as eps decreases.
    """
    a = validate_finite(alpha, "alpha")
    b = validate_finite(beta, "beta")
    ratios = []
    for eps in lower_limits:
        e = validate_finite(eps, "lower_limit")
        if not 0.0 < e < 1.0:
            raise InvalidInputError("lower_limit", "must lie in (0, 1)")
        lo, hi = np.array([e]), np.array([1.0])
        numerator = weighted_linear_square_integral(lo, hi, np.array([1.0 - e]), np.array([0.0]), b)
        ratios.append(float(numerator[0]) / float(power_integral(e, 1.0, a)))
    return np.array(ratios)


def build_comparison_table(alphas: Iterable[float],
                           fits: Optional[Mapping[float, MeasuredRates]] = None) -> List[ComparisonRow]:
    """One row per alpha with predicted orders and, when given, measured exponents."""
    rows = []
    for alpha in alphas:
        prediction = predict_rates(alpha)
        measured = (fits or {}).get(alpha, MeasuredRates())
        rows.append(ComparisonRow(
            alpha=prediction.alpha,
            decay_order=prediction.decay_order,
            prior_order=prediction.prior_order,
            theta_fit=measured.theta_fit,
            slope_energy=measured.slope_energy,
        ))
    return rows


def _decay_text(alpha: float, order: float) -> str:
    if decay_regime(alpha) is DecayRegime.OPTIMAL_POLYNOMIAL:
        return f"optimal polynomial t^-{order:g}"
    return f"polynomial t^-{order:.6g}"


def _optional(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def render_comparison_text(rows: Sequence[ComparisonRow]) -> str:
    """Aligned plain-text comparison table ending with the exponential row."""
    header = ("alpha", "damping coefficient", "decay rate of solution", "prior rate",
              "theta_fit", "slope_energy")
    body = [
        (f"{row.alpha:g}", f"x^{row.alpha:g}", _decay_text(row.alpha, row.decay_order),
         f"t^-{row.prior_order:.6g}", _optional(row.theta_fit), _optional(row.slope_energy))
        for row in rows
    ]
    regime = decay_regime(1.0).value
    body.append((">= 1", "x^alpha", f"{regime} decay rate", "-", "-", "-"))

    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]

    def fmt(line: Sequence[str]) -> str:
        return " | ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip()

    separator = "-+-".join("-" * width for width in widths)
    return "\n".join([fmt(header), separator, *(fmt(line) for line in body)]) + "\n"


def write_hardy_csv(cases: Sequence[HardyCase], path: Union[str, Path]) -> Path:
    return write_csv(
        path,
        ["alpha", "beta", "ratio_coarse", "ratio", "growth", "n_samples"],
        ((c.alpha, c.beta, c.ratio_coarse, c.ratio, c.growth, c.n_samples) for c in cases),
    )


def write_comparison_csv(rows: Sequence[ComparisonRow], path: Union[str, Path]) -> Path:
    return write_csv(
        path,
        ["alpha", "decay_order", "prior_order", "theta_fit", "slope_energy"],
        ((r.alpha, r.decay_order, r.prior_order, r.theta_fit, r.slope_energy) for r in rows),
    )
