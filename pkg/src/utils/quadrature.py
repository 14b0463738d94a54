"""Closed-form integrals of powers of x over element intervals."""

from typing import Union

import numpy as np
import numpy.typing as npt

ArrayLike = Union[float, npt.NDArray[np.float64]]


def power_integral(a: ArrayLike, b: ArrayLike, p: float) -> ArrayLike:
    """
    Integral of x**p over [a, b] with 0 <= a <= b, elementwise.

    ``p = -1`` uses the logarithm; for ``p < -1`` the left end must be positive.
    An interval starting at 0 with ``p <= -1`` integrates to ``inf``.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if p == -1.0:
            result = np.log(b_arr) - np.log(a_arr)
        else:
            q = p + 1.0
            result = (np.power(b_arr, q) - np.power(a_arr, q)) / q
    result = np.where(b_arr == a_arr, 0.0, result)
    if np.ndim(result) == 0:
        return float(result)
    return result


def weighted_linear_square_integral(
    a: npt.NDArray[np.float64],
    b: npt.NDArray[np.float64],
    fa: npt.NDArray[np.float64],
    fb: npt.NDArray[np.float64],
    p: float,
) -> npt.NDArray[np.float64]:
    """
    Integral of x**p * f(x)**2 over each [a_k, b_k] for f linear on the element
    with end values fa_k, fb_k.

    Writing f = c0 + c1 x turns the integrand into three pure powers.
    """
    h = b - a
    c1 = (fb - fa) / h
    c0 = fa - c1 * a
    return (
        c0 * c0 * power_integral(a, b, p)
        + 2.0 * c0 * c1 * power_integral(a, b, p + 1.0)
        + c1 * c1 * power_integral(a, b, p + 2.0)
    )
