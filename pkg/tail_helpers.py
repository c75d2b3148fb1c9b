# Tail function objects for the positive and negative halves of a Levy measure
# Each tail maps x > 0 to the mass of jumps with magnitude above x

import math
import numpy as np
from scipy.interpolate import PchipInterpolator


##### POWER TAILS #####


class PowerTail:

    """
    Stable-like tail c * x^(-alpha) for x <= 1

    Above 1 the tail is multiplied by exp(-tempering * (x - 1)), which is
    continuous at 1. With tempering 0 the tail is a pure power law.
    """

    kind = "power"

    def __init__(self, c, alpha, tempering=0.0):
        self.c = float(c)
        self.alpha = float(alpha)
        self.tempering = float(tempering)

    @property
    def is_zero(self):
        return self.c == 0.0

    @property
    def breakpoints(self):
        return [1.0] if self.tempering > 0 else None

    def _scalar(self, x):
        if self.c == 0.0:
            return 0.0
        value = self.c * x ** (-self.alpha)
        if x > 1.0 and self.tempering > 0:
            value *= math.exp(-self.tempering * (x - 1.0))
        return value

    def __call__(self, x):
        if np.isscalar(x):
            return self._scalar(float(x))

        x = np.asarray(x, dtype=float)
        if self.c == 0.0:
            return np.zeros_like(x)

        values = self.c * x ** (-self.alpha)
        if self.tempering > 0:
            values = np.where(
                x > 1.0, values * np.exp(-self.tempering * np.maximum(x - 1.0, 0.0)), values
            )
        return values

    def left_limit(self, x):
        return self(x)

    def density(self, x):

        """Lebesgue density of the measure, minus the derivative of the tail"""

        x = float(x)
        if self.c == 0.0:
            return 0.0
        value = self.c * self.alpha * x ** (-self.alpha - 1.0)
        if x > 1.0 and self.tempering > 0:
            damp = math.exp(-self.tempering * (x - 1.0))
            value = damp * (value + self.tempering * self.c * x ** (-self.alpha))
        return value

    def inverse(self, levels):

        """
        Closed-form solution of tail(x) = level

        Returns NaN where no closed form applies (tempered part above 1),
        so the caller can fall back to bisection for those entries.
        """

        levels = np.asarray(levels, dtype=float)
        with np.errstate(divide="ignore"):
            roots = (levels / self.c) ** (-1.0 / self.alpha)
        if self.tempering > 0:
            roots = np.where(levels >= self.c, roots, np.nan)
        return roots

    def describe(self):
        return {"kind": self.kind, "c": self.c, "alpha": self.alpha, "tempering": self.tempering}


##### TABLE TAILS #####


class TableTail:

    """
    Tail given by values on a grid

    Interpolation is "loglinear" (continuous, linear in log-log space),
    "pchip" (monotone cubic in log-log space) or "step" (right-continuous,
    each grid value holds until the next grid point). Off the grid the tail
    follows the power law of the nearest segment; above the grid that power
    is capped at -1 so the tail still vanishes at infinity.
    """

    kind = "table"

    def __init__(self, x, values, interpolation="loglinear"):
        self.x = np.asarray(x, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.interpolation = interpolation

        if self.x.ndim != 1 or self.x.size < 2 or self.x.size != self.values.size:
            raise ValueError("table tails need matching x and value arrays of length >= 2")
        if np.any(self.x <= 0) or np.any(np.diff(self.x) <= 0):
            raise ValueError("table x values must be positive and strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("table tail values must be non-negative")
        if interpolation not in ("loglinear", "pchip", "step"):
            raise ValueError(f"unknown interpolation '{interpolation}'")

        self._positive = bool(np.all(self.values > 0))
        self._low_slope = self._segment_slope(0, 1)
        last = self._segment_slope(-2, -1)
        self._high_slope = min(last, -1.0) if last is not None else None

        self._pchip = None
        if interpolation == "pchip" and self._positive:
            self._pchip = PchipInterpolator(np.log(self.x), np.log(self.values), extrapolate=False)

    def _segment_slope(self, i, j):
        if self.values[i] > 0 and self.values[j] > 0:
            return float(
                (math.log(self.values[j]) - math.log(self.values[i]))
                / (math.log(self.x[j]) - math.log(self.x[i]))
            )
        return None

    @property
    def is_zero(self):
        return bool(np.all(self.values == 0))

    @property
    def breakpoints(self):
        # pchip tables are C1, only kinks and jumps need splitting
        if self.interpolation == "pchip":
            return None
        return list(self.x)

    def _inside(self, x, left=False):
        if self.interpolation == "step":
            side = "left" if left else "right"
            idx = np.searchsorted(self.x, x, side=side) - 1
            return self.values[np.clip(idx, 0, self.x.size - 1)]

        if self._pchip is not None:
            return np.exp(self._pchip(np.log(x)))

        if self._positive:
            return np.exp(np.interp(np.log(x), np.log(self.x), np.log(self.values)))

        return np.interp(np.log(x), np.log(self.x), self.values)

    def _evaluate(self, x, left=False):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)

        below = x < self.x[0]
        above = x > self.x[-1]
        inside = ~(below | above)

        if np.any(inside):
            out[inside] = self._inside(x[inside], left)

        if np.any(below):
            if self._low_slope is not None:
                out[below] = self.values[0] * (x[below] / self.x[0]) ** self._low_slope
            else:
                out[below] = self.values[0]

        if np.any(above):
            if self._high_slope is not None:
                out[above] = self.values[-1] * (x[above] / self.x[-1]) ** self._high_slope
            else:
                out[above] = 0.0

        return out

    def __call__(self, x):
        if np.isscalar(x):
            return float(self._evaluate(np.array([x]))[0])
        return self._evaluate(x)

    def left_limit(self, x):
        if np.isscalar(x):
            return float(self._evaluate(np.array([x]), left=True)[0])
        return self._evaluate(x, left=True)

    def density(self, x):
        return None

    def inverse(self, levels):
        return np.full(np.shape(levels), np.nan)

    def describe(self):
        return {
            "kind": self.kind,
            "x": self.x.tolist(),
            "values": self.values.tolist(),
            "interpolation": self.interpolation,
        }


##### TRIVIAL AND USER TAILS #####


class ZeroTail:

    """Tail of an empty half-measure"""

    kind = "zero"
    is_zero = True
    breakpoints = None

    def __call__(self, x):
        if np.isscalar(x):
            return 0.0
        return np.zeros(np.shape(x))

    def left_limit(self, x):
        return self(x)

    def density(self, x):
        return 0.0

    def inverse(self, levels):
        return np.full(np.shape(levels), np.nan)

    def describe(self):
        return {"kind": self.kind}


class CallableTail:

    """Wraps a user function x -> tail(x); arrays are evaluated elementwise"""

    kind = "callable"
    is_zero = False
    breakpoints = None

    def __init__(self, func, density_func=None):
        self.func = func
        self.density_func = density_func

    def __call__(self, x):
        if np.isscalar(x):
            return float(self.func(float(x)))
        x = np.asarray(x, dtype=float)
        return np.array([float(self.func(v)) for v in x.ravel()]).reshape(x.shape)

    def left_limit(self, x):
        if np.isscalar(x):
            return self(float(x) * (1.0 - 1e-12))
        return self(np.asarray(x, dtype=float) * (1.0 - 1e-12))

    def density(self, x):
        if self.density_func is None:
            return None
        return float(self.density_func(float(x)))

    def inverse(self, levels):
        return np.full(np.shape(levels), np.nan)

    def describe(self):
        return {"kind": self.kind}
