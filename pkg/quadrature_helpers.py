# Quadrature on log-spaced partitions
# Every integrand in this package is monotone and power-like near 0,
# so integrals are taken in u = log(y) where they become smooth

import logging
import math
import warnings
import numpy as np
from scipy import integrate
from config import QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT, QUAD_MAX_PIECES
from errors import QuadratureError


##### SINGLE INTERVAL #####


def _quad_log(func, a, b, breakpoints=None):

    """Integrate func over [a, b] (0 < a < b) after substituting y = e^u"""

    lo, hi = math.log(a), math.log(b)

    def integrand(u):
        y = math.exp(u)
        return float(func(y)) * y

    points = None
    if breakpoints is not None:
        points = [math.log(p) for p in breakpoints if a < p < b] or None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            integrand,
            lo,
            hi,
            points=points,
            epsabs=QUAD_EPSABS * 1e-3,
            epsrel=QUAD_EPSREL * 1e-2,
            limit=QUAD_LIMIT,
        )

    if not math.isfinite(value):
        raise QuadratureError(
            f"Non-finite integral on [{a:.6g}, {b:.6g}]",
            interval=(a, b),
            diagnostics={"value": value, "abserr": abserr},
        )

    if abserr > max(QUAD_EPSABS, QUAD_EPSREL * abs(value)):
        raise QuadratureError(
            f"Quadrature error estimate {abserr:.3g} too large on [{a:.6g}, {b:.6g}]",
            interval=(a, b),
            diagnostics={"value": value, "abserr": abserr},
        )

    return value


##### PUBLIC HELPERS #####


def log_grid(x_min, x_max, num):

    """Geometric grid from x_max down to x_min (decreasing)"""

    if x_min <= 0 or x_max <= 0:
        raise ValueError("log grid endpoints must be positive")

    return np.geomspace(x_max, x_min, num)


def dyadic_grid(j_min, j_max):

    """Decreasing grid x_j = 2^-j, j = j_min..j_max"""

    return np.array([2.0 ** (-j) for j in range(j_min, j_max + 1)])


def integrate_between(func, a, b, breakpoints=None):

    """
    Integrate func over [a, b] for 0 < a, b

    A reversed interval returns the negated integral, so callers can use
    signed expressions such as the integral from x to 1 for x > 1.
    """

    if a == b:
        return 0.0
    if a > b:
        return -integrate_between(func, b, a, breakpoints)

    # Split at powers of 16 so each piece spans a bounded log-range

    total = 0.0
    left = a
    while left < b:
        right = min(b, left * 16.0)
        total += _quad_log(func, left, right, breakpoints)
        left = right

    return total


def integrate_to_zero(func, x, breakpoints=None):

    """
    Integrate func over (0, x] on the dyadic partition x/2^(k+1) .. x/2^k

    Pieces are summed until the geometric tail estimate of the remainder is
    below tolerance. Growing pieces mean the integral diverges at 0, which
    is reported as a QuadratureError with the piece history.

    Args:
        func: Non-negative integrand on (0, x]
        x: Upper limit (> 0)
        breakpoints: Optional discontinuity locations

    Returns:
        The integral value
    """

    if x <= 0:
        raise ValueError("upper limit must be positive")

    total = 0.0
    pieces = []
    hi = x

    for k in range(QUAD_MAX_PIECES):
        lo = hi * 0.5
        if lo < 1e-300:
            break

        piece = _quad_log(func, lo, hi, breakpoints)
        pieces.append(piece)
        total += piece
        hi = lo

        if piece <= 0.0:
            # Integrand vanished; once two consecutive pieces are empty we are done
            if len(pieces) >= 2 and pieces[-2] <= 0.0:
                return total
            continue

        if len(pieces) < 3 or pieces[-2] <= 0.0 or pieces[-3] <= 0.0:
            continue

        ratio = piece / pieces[-2]
        ratio_prev = pieces[-2] / pieces[-3]

        # Growing pieces: the integral diverges at 0

        if len(pieces) >= 6 and all(
            pieces[i] >= pieces[i - 1] for i in range(len(pieces) - 4, len(pieces))
        ):
            logging.error(f"Integral over (0, {x:.6g}] diverges; last pieces {pieces[-4:]}")
            raise QuadratureError(
                f"Integral over (0, {x:.6g}] diverges at 0",
                interval=(0.0, x),
                diagnostics={"pieces": pieces[-8:], "ratio": ratio},
            )

        if ratio >= 1.0:
            continue

        tail = piece * ratio / (1.0 - ratio)
        tolerance = max(QUAD_EPSABS * 1e-2, QUAD_EPSREL * 1e-2 * abs(total))

        if tail <= tolerance:
            return total + tail

        # Exact geometric decay (power law near 0): close the sum in one step

        if abs(ratio - ratio_prev) <= 1e-10 * max(1.0, ratio):
            return total + tail

    raise QuadratureError(
        f"Integral over (0, {x:.6g}] did not converge after {len(pieces)} pieces",
        interval=(0.0, x),
        diagnostics={"pieces": pieces[-8:]},
    )
