# Levy model representation and the tail-based functionals
# nu, A, U, V, V+, V- and the tail quantiles d+(t), d-(t)

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Callable, Optional
import numpy as np
import pandas as pd
from scipy import signal
from config import (
    ACTIVITY_CHECK_X,
    ACTIVITY_THRESHOLD,
    VALIDATION_POINTS,
    VALIDATION_X_MAX,
    VALIDATION_X_MIN,
)
from errors import (
    BisectionError,
    ModelValidationError,
    PreconditionError,
    QuadratureError,
    QuantileUndefinedError,
)
from quadrature_helpers import integrate_between, integrate_to_zero, log_grid
from tail_helpers import PowerTail, TableTail


PLUS = "+"
MINUS = "-"
SIDES = (PLUS, MINUS)

FUNCTIONAL_COLUMNS = ["x", "tail_plus", "tail_minus", "nu", "A", "V", "V_plus", "V_minus", "U"]


##### MODEL TYPES #####


@dataclass
class LevyModel:

    """
    Levy process given by its canonical triplet (gamma, sigma^2, Pi)

    Pi is described by its positive and negative tails. The characteristic
    exponent is
        Psi(theta) = i theta gamma - sigma^2 theta^2 / 2
                     + int (e^{i theta x} - 1 - i theta x 1{|x| <= 1}) Pi(dx)
    and is kept here as documentation; nothing in the package evaluates it.
    """

    gamma: float
    sigma2: float
    tail_plus: object
    tail_minus: object
    density_plus: Optional[Callable] = None
    density_minus: Optional[Callable] = None
    label: str = "levy"
    spec: dict = field(default_factory=dict)

    def tail(self, side):
        check_side(side)
        return self.tail_plus if side == PLUS else self.tail_minus

    def density(self, side):
        check_side(side)
        return self.density_plus if side == PLUS else self.density_minus

    def total_tail(self, x):
        return self.tail_plus(x) + self.tail_minus(x)


@dataclass
class ValidationCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:

    """Outcome of validate_model, one entry per check"""

    label: str
    checks: list = field(default_factory=list)
    analytic_only: bool = False

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def failures(self):
        return [check for check in self.checks if not check.passed]

    def to_dict(self):
        return {
            "label": self.label,
            "passed": self.passed,
            "analytic_only": self.analytic_only,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
        }


@dataclass
class FunctionalRecord:
    x: float
    tail_plus: float
    tail_minus: float
    nu: float
    A: float
    V: float
    V_plus: float
    V_minus: float
    U: float

    def as_row(self):
        return [getattr(self, f.name) for f in fields(self)]


@dataclass
class FunctionalTable:

    """Functionals evaluated on a decreasing geometric grid"""

    grid: list
    records: list

    def to_frame(self):
        return pd.DataFrame([r.as_row() for r in self.records], columns=FUNCTIONAL_COLUMNS)


##### SMALL HELPERS #####


def check_side(side):
    if side not in SIDES:
        raise ValueError(f"side must be '+' or '-', got {side!r}")


def mirror_model(model):

    """Model of -X: tails swapped and gamma negated"""

    return LevyModel(
        gamma=-model.gamma,
        sigma2=model.sigma2,
        tail_plus=model.tail_minus,
        tail_minus=model.tail_plus,
        density_plus=model.density_minus,
        density_minus=model.density_plus,
        label=f"{model.label}-mirrored",
        spec=dict(model.spec),
    )


def side_is_zero(model, side):

    """True when the half-measure on this side is empty"""

    tail = model.tail(side)
    if getattr(tail, "is_zero", False):
        return True
    return float(tail(ACTIVITY_CHECK_X)) == 0.0


def side_has_infinite_activity(model, side):

    """Numerical check of tail(0+) = infinity on one side"""

    if side_is_zero(model, side):
        return False
    return float(model.tail(side)(ACTIVITY_CHECK_X)) > ACTIVITY_THRESHOLD


def _breakpoints(model, side):
    return getattr(model.tail(side), "breakpoints", None)


##### VALIDATION #####


def validate_model(model, x_min=VALIDATION_X_MIN, x_max=VALIDATION_X_MAX):

    """
    Check the standing assumptions on a model

    Args:
        model: The LevyModel to check
        x_min, x_max: Range on which the tails are checked

    Returns:
        ValidationReport listing monotonicity, infinite activity and the
        finiteness of U(1). Brownian-only models are marked analytic_only.
    """

    report = ValidationReport(label=model.label)

    report.checks.append(
        ValidationCheck(
            "sigma2_nonnegative",
            model.sigma2 >= 0 and math.isfinite(model.sigma2),
            f"sigma2={model.sigma2}",
        )
    )

    # Monotone tails on a log grid plus any table breakpoints

    grid = log_grid(x_min, x_max, VALIDATION_POINTS)[::-1]

    for side in SIDES:
        points = grid
        extra = _breakpoints(model, side)
        if extra:
            inner = [p for p in extra if x_min < p < x_max]
            points = np.unique(np.concatenate([grid, inner, np.array(inner) * (1 + 1e-9)]))

        values = np.asarray(model.tail(side)(points), dtype=float)
        name = f"tail_{'plus' if side == PLUS else 'minus'}_monotone"

        if np.any(~np.isfinite(values)) or np.any(values < 0):
            bad = int(np.argmax(~np.isfinite(values) | (values < 0)))
            report.checks.append(
                ValidationCheck(name, False, f"invalid tail value {values[bad]} at x={points[bad]:.6g}")
            )
            continue

        rises = np.nonzero(values[1:] > values[:-1] * (1 + 1e-12) + 1e-300)[0]
        if rises.size:
            i = int(rises[0])
            report.checks.append(
                ValidationCheck(
                    name,
                    False,
                    f"tail increases from {values[i]:.6g} at x={points[i]:.6g} "
                    f"to {values[i + 1]:.6g} at x={points[i + 1]:.6g}",
                )
            )
        else:
            report.checks.append(ValidationCheck(name, True, f"{points.size} points"))

    # Infinite activity

    tail_near_zero = float(model.total_tail(ACTIVITY_CHECK_X))
    both_zero = side_is_zero(model, PLUS) and side_is_zero(model, MINUS)

    if both_zero and model.sigma2 > 0:
        report.analytic_only = True
        report.checks.append(
            ValidationCheck("infinite_activity", False, "Brownian only (Pi = 0): analytic-only")
        )
    elif tail_near_zero > ACTIVITY_THRESHOLD:
        report.checks.append(
            ValidationCheck("infinite_activity", True, f"tail({ACTIVITY_CHECK_X:g})={tail_near_zero:.6g}")
        )
    else:
        report.checks.append(
            ValidationCheck(
                "infinite_activity",
                False,
                f"compound Poisson excluded: tail({ACTIVITY_CHECK_X:g})={tail_near_zero:.6g} "
                f"<= {ACTIVITY_THRESHOLD:g}",
            )
        )

    # Square integrability near 0

    if both_zero:
        report.checks.append(ValidationCheck("U1_finite", True, "no jumps"))
    else:
        try:
            u_one = model.sigma2 + sum(_winsor_integral(model, side, 1.0) for side in SIDES)
            report.checks.append(ValidationCheck("U1_finite", True, f"U(1)={u_one:.6g}"))
        except QuadratureError as e:
            report.checks.append(
                ValidationCheck("U1_finite", False, f"U(1) quadrature diverges: {e}")
            )

    if report.passed:
        logging.info(f"Model '{model.label}' passed validation")
    else:
        for check in report.failures():
            logging.warning(f"Model '{model.label}' failed {check.name}: {check.detail}")

    return report


def require_valid(model, allow_analytic_only=False):

    """Validate and raise ModelValidationError on failure"""

    report = validate_model(model)
    if report.passed or (allow_analytic_only and report.analytic_only):
        return report

    details = "; ".join(f"{c.name}: {c.detail}" for c in report.failures())
    logging.error(f"Model '{model.label}' rejected: {details}")
    raise ModelValidationError(f"model '{model.label}' rejected: {details}", report)


##### TAIL INTEGRALS #####


def _tail_integral_to_one(model, side, x):

    """Signed integral of the tail from x to 1"""

    tail = model.tail(side)
    if side_is_zero(model, side) or x == 1.0:
        return 0.0
    return integrate_between(tail, x, 1.0, _breakpoints(model, side))


def _winsor_integral(model, side, x):

    """2 * integral over (0, x] of y * tail(y)"""

    if side_is_zero(model, side):
        return 0.0
    tail = model.tail(side)
    return 2.0 * integrate_to_zero(lambda y: y * tail(y), x, _breakpoints(model, side))


def _nu_side(model, side, h):

    """
    Integral of y over (h, 1] against the half-measure, from the tail alone

    Uses h*tail(h) - tail(1) + int_h^1 tail; for h > 1 the same expression
    is the signed integral (minus the integral over (1, h]).
    """

    if side_is_zero(model, side):
        return 0.0
    tail = model.tail(side)
    return h * tail(h) - tail(1.0) + _tail_integral_to_one(model, side, h)


def nu_pm(model, h):

    """
    Truncated first moments (nu+(h), nu-(h)) over (h, 1]

    Args:
        model: The LevyModel
        h: Truncation level in (0, 1]

    Returns:
        Tuple (nu_plus, nu_minus)
    """

    if not 0 < h <= 1:
        raise PreconditionError(f"nu_pm needs 0 < h <= 1, got h={h}")

    return _nu_side(model, PLUS, h), _nu_side(model, MINUS, h)


def truncated_moment(model, side, h, k):

    """
    Absolute moment of order k >= 2 over (0, h] for one side

    Computed as k * int_0^h y^(k-1) tail(y) dy - h^k tail(h).
    """

    if k < 2:
        raise ValueError("truncated moments are defined here for k >= 2")
    if h <= 0 or side_is_zero(model, side):
        return 0.0

    tail = model.tail(side)

    # Below 1 every PowerTail is an exact power law
    if isinstance(tail, PowerTail) and h <= 1.0:
        return tail.c * tail.alpha * h ** (k - tail.alpha) / (k - tail.alpha)

    integral = integrate_to_zero(lambda y: y ** (k - 1) * tail(y), h, _breakpoints(model, side))
    return max(k * integral - h**k * tail(h), 0.0)


def jump_mean(model, side, lo, hi):

    """
    Integral of y over (lo, hi] against one half-measure

    Equals lo*tail(lo) - hi*tail(hi) + int_lo^hi tail(y) dy.
    """

    if hi <= lo or side_is_zero(model, side):
        return 0.0

    tail = model.tail(side)
    if isinstance(tail, PowerTail) and hi <= 1.0:
        if tail.alpha == 1.0:
            return tail.c * math.log(hi / lo)
        return tail.c * tail.alpha * (hi ** (1 - tail.alpha) - lo ** (1 - tail.alpha)) / (1 - tail.alpha)

    return lo * tail(lo) - hi * tail(hi) + integrate_between(tail, lo, hi, _breakpoints(model, side))


##### FUNCTIONALS #####


def functionals(model, x):

    """
    Evaluate every tail functional at x > 0

    Returns:
        FunctionalRecord with tails, nu, A, V, V+, V-, U
    """

    if x <= 0:
        raise ValueError(f"functionals need x > 0, got {x}")

    tail_p = float(model.tail_plus(x))
    tail_m = float(model.tail_minus(x))
    tail_p1 = float(model.tail_plus(1.0))
    tail_m1 = float(model.tail_minus(1.0))

    int_p = _tail_integral_to_one(model, PLUS, x)
    int_m = _tail_integral_to_one(model, MINUS, x)

    nu_plus = 0.0 if side_is_zero(model, PLUS) else x * tail_p - tail_p1 + int_p
    nu_minus = 0.0 if side_is_zero(model, MINUS) else x * tail_m - tail_m1 + int_m

    nu = model.gamma - nu_plus + nu_minus
    a_value = model.gamma + tail_p1 - tail_m1 - (int_p - int_m)

    w_plus = _winsor_integral(model, PLUS, x)
    w_minus = _winsor_integral(model, MINUS, x)

    v_plus = w_plus - x * x * tail_p
    v_minus = w_minus - x * x * tail_m
    u_value = model.sigma2 + w_plus + w_minus

    return FunctionalRecord(
        x=float(x),
        tail_plus=tail_p,
        tail_minus=tail_m,
        nu=nu,
        A=a_value,
        V=model.sigma2 + v_plus + v_minus,
        V_plus=v_plus,
        V_minus=v_minus,
        U=u_value,
    )


def functional_table(model, grid):

    """Evaluate functionals on every grid point (grid sorted decreasing)"""

    grid = sorted((float(x) for x in grid), reverse=True)
    logging.info(f"Evaluating functionals of '{model.label}' on {len(grid)} grid points")
    records = [functionals(model, x) for x in grid]
    return FunctionalTable(grid=grid, records=records)


def density_cross_check(model, x):

    """
    Compare tail-only nu and V with direct density quadrature

    Returns:
        Dict with both evaluations and their relative differences,
        or None when a side lacks a density
    """

    densities = {}
    for side in SIDES:
        if side_is_zero(model, side):
            densities[side] = None
            continue
        dens = model.density(side)
        if dens is None:
            return None
        densities[side] = dens

    def first_moment(side):
        dens = densities[side]
        if dens is None:
            return 0.0
        return integrate_between(lambda y: y * dens(y), x, 1.0, _breakpoints(model, side))

    def second_moment(side):
        dens = densities[side]
        if dens is None:
            return 0.0
        return integrate_to_zero(lambda y: y * y * dens(y), x, _breakpoints(model, side))

    record = functionals(model, x)
    nu_density = model.gamma - first_moment(PLUS) + first_moment(MINUS)
    v_density = model.sigma2 + second_moment(PLUS) + second_moment(MINUS)

    return {
        "x": x,
        "nu_tail": record.nu,
        "nu_density": nu_density,
        "V_tail": record.V,
        "V_density": v_density,
        "nu_rel_diff": abs(record.nu - nu_density) / max(abs(nu_density), 1e-300),
        "V_rel_diff": abs(record.V - v_density) / max(abs(v_density), 1e-300),
    }


def bounded_variation(model, side):

    """
    Whether int_0^1 tail(y) dy is finite on one side

    Power tails are decided exactly (alpha < 1). Other tails use the dyadic
    increments of int_x^1 tail: geometric decay means convergence.
    """

    if side_is_zero(model, side):
        return True

    tail = model.tail(side)
    if isinstance(tail, PowerTail):
        return tail.alpha < 1.0

    increments = []
    for j in range(10, 41):
        hi, lo = 2.0 ** (-j), 2.0 ** (-j - 1)
        increments.append(integrate_between(tail, lo, hi, _breakpoints(model, side)))

    ratios = [b / a for a, b in zip(increments[-11:-1], increments[-10:]) if a > 0]
    if not ratios:
        return True
    return float(np.mean(ratios)) <= 0.95


##### TAIL INVERSION #####


def solve_tail_levels(tail, levels, lo, hi, iterations=200):

    """
    Vectorised bisection for the smallest x with tail(x) <= level

    Args:
        tail: Non-increasing tail function
        levels: Target levels (array)
        lo, hi: Brackets with tail(lo) > level >= tail(hi) elementwise
        iterations: Bisection steps in log space

    Returns:
        Array of x values (the upper end of the final bracket)
    """

    levels = np.asarray(levels, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), levels.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), levels.shape).copy()

    if np.any(tail(hi) > levels):
        raise BisectionError("upper bracket does not reach the requested level")

    log_lo, log_hi = np.log(lo), np.log(hi)
    for _ in range(iterations):
        mid = 0.5 * (log_lo + log_hi)
        above = tail(np.exp(mid)) > levels
        log_lo = np.where(above, mid, log_lo)
        log_hi = np.where(above, log_hi, mid)
        if np.all(log_hi - log_lo < 1e-15):
            break

    return np.exp(log_hi)


def _bracket(tail, level, start=1.0):

    """Find lo < hi with tail(lo) > level >= tail(hi) by repeated doubling"""

    lo = start
    steps = 0
    while tail(lo) <= level:
        lo *= 0.5
        steps += 1
        if lo < 1e-300 or steps > 2000:
            raise BisectionError(f"tail never exceeds level {level:.6g} near 0")

    hi = max(start, lo * 2.0)
    steps = 0
    while tail(hi) > level:
        hi *= 2.0
        steps += 1
        if hi > 1e300 or steps > 2000:
            raise BisectionError(f"tail never falls to level {level:.6g}")

    return lo, hi


def tail_quantile(model, t, side, lam=1.0):

    """
    Tail quantile d(lam*t) = inf{x > 0 : tail(x) <= 1 / (lam * t)}

    Args:
        model: The LevyModel
        t: Time (> 0)
        side: '+' or '-'
        lam: Scale factor (> 0), defaults to 1

    Returns:
        The quantile; for step tails the left endpoint of the level set
    """

    if t <= 0 or lam <= 0:
        raise ValueError("tail_quantile needs t > 0 and lam > 0")
    check_side(side)

    if not side_has_infinite_activity(model, side):
        raise QuantileUndefinedError(
            f"quantile undefined: tail on side '{side}' of '{model.label}' is finite at 0"
        )

    tail = model.tail(side)
    level = 1.0 / (lam * t)

    closed = getattr(tail, "inverse", None)
    if closed is not None:
        root = float(np.asarray(closed(np.array([level])))[0])
        if math.isfinite(root) and root > 0:
            return root

    lo, hi = _bracket(tail, level)
    return float(solve_tail_levels(tail, np.array([level]), lo, hi)[0])


##### MEASURE SMOOTHING #####


def _weight(y):
    y2 = y * y
    return y2 / (1.0 + y2)


def _weight_derivative(y):
    return 2.0 * y / (1.0 + y * y) ** 2


def _cell_masses(model, side, edges):

    """
    Mass of y^2/(1+y^2) Pi(dy) in each cell (edges[k], edges[k+1]]

    Integration by parts against the tail; the first cell uses the second
    truncated moment, where the weight is y^2 to leading order.
    """

    if side_is_zero(model, side):
        return np.zeros(edges.size - 1)

    tail = model.tail(side)
    lower, upper = edges[:-1], edges[1:]
    mids = 0.5 * (lower + upper)

    safe_lower = lower.copy()
    safe_lower[0] = upper[0]
    lower_term = _weight(safe_lower) * tail(safe_lower)
    masses = (
        lower_term
        - _weight(upper) * tail(upper)
        + _weight_derivative(mids) * tail(mids) * (upper - lower)
    )
    masses[0] = truncated_moment(model, side, float(upper[0]), 2) / (1.0 + upper[0] ** 2)
    return np.maximum(masses, 0.0)


def smooth_measure(model, n, grid, max_cells=2**21):

    """
    Smooth the Levy measure by Gaussian convolution of its normalised form

    P(dx) = x^2 Pi(dx) / (C (1 + x^2)) is convolved with N(0, 1/n) and mapped
    back by Pi_n(dx) = C (1 + x^2) P_n(dx) / x^2. The constant C cancels, so
    the unnormalised weights are convolved directly on a uniform cell grid.

    Args:
        model: Validated LevyModel
        n: Positive integer (Gaussian variance 1/n)
        grid: Evaluation points x > 0 for the smoothed tails

    Returns:
        LevyModel with monotone (pchip) table tails on the grid and
        power-law extrapolation outside it
    """

    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")

    require_valid(model)

    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size < 2 or grid[0] <= 0:
        raise ValueError("smoothing grid needs at least two positive points")

    scale = 1.0 / math.sqrt(n)
    width = max(2.0 * grid[-1], grid[-1] + 12.0 * scale, 4.0)
    step = min(scale / 10.0, grid[0] / 4.0)

    cells = int(math.ceil(width / step))
    if cells > max_cells:
        cells = max_cells
        step = width / cells
        logging.warning(f"Smoothing grid capped at {cells} cells per side (step {step:.3g})")

    edges = np.arange(cells + 1) * step
    centers = 0.5 * (edges[:-1] + edges[1:])

    masses_plus = _cell_masses(model, PLUS, edges)
    masses_minus = _cell_masses(model, MINUS, edges)

    # Signed axis: negative cells reversed, then positive cells

    masses = np.concatenate([masses_minus[::-1], masses_plus])
    half = int(math.ceil(10.0 * scale / step))
    offsets = np.arange(-half, half + 1) * step
    kernel = np.exp(-0.5 * (offsets / scale) ** 2) / (scale * math.sqrt(2.0 * math.pi))

    smoothed = signal.fftconvolve(masses, kernel, mode="same")
    smoothed = np.maximum(smoothed, 0.0)

    density_plus = smoothed[cells:] * (1.0 + centers**2) / centers**2
    density_minus = smoothed[:cells][::-1] * (1.0 + centers**2) / centers**2

    def tail_values(density, side):
        # Midpoint rule on each cell, accumulated from the top down
        cumulative = np.concatenate([np.cumsum((density * step)[::-1])[::-1], [0.0]])
        outer = float(model.tail(side)(edges[-1]))
        return np.interp(grid, edges, cumulative) + outer

    values_plus = tail_values(density_plus, PLUS)
    values_minus = tail_values(density_minus, MINUS)

    logging.info(
        f"Smoothed '{model.label}' with n={n}: {cells} cells per side, step {step:.3g}"
    )

    return LevyModel(
        gamma=model.gamma,
        sigma2=model.sigma2,
        tail_plus=TableTail(grid, np.maximum(values_plus, 1e-300), "pchip"),
        tail_minus=TableTail(grid, np.maximum(values_minus, 1e-300), "pchip"),
        label=f"{model.label}-smoothed-n{n}",
        spec={"smoothed_from": model.label, "n": int(n)},
    )
