# Ratio criteria for small-time positivity and the verdict classifier

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional
import numpy as np
from catalog import drift_at_zero, ratio_asymptote, stable_parameters
from config import GRID_J_MAX, GRID_J_MIN, MIN_GRID_POINTS, RATIO_R_MAX, RATIO_S_MIN
from errors import PreconditionError
from levy_model import (
    MINUS,
    PLUS,
    bounded_variation,
    functionals,
    mirror_model,
    side_has_infinite_activity,
    side_is_zero,
    require_valid,
)
from quadrature_helpers import dyadic_grid


RATIO_COLUMNS = ["x", "ratio_minus", "ratio_plus", "ratio_minus_shifted"]

HEURISTIC_NOTE = (
    "divergence declared when the trailing ratios exceed R_max and the fitted "
    "log-log slope is at most -s_min; finite grids cannot certify limits"
)


class Verdict(str, Enum):
    TENDS_POSITIVE = "TendsPositive"
    SUBSEQUENCE_POSITIVE = "SubsequencePositive"
    LINEAR_SUBSEQUENCE_DIVERGENCE = "LinearSubsequenceDivergence"
    STAYS_TWO_SIDED = "StaysTwoSided"
    STAYS_NON_NEGATIVE_SIDE = "StaysNonNegativeSide"
    STAYS_NON_POSITIVE_SIDE = "StaysNonPositiveSide"
    SPECTRALLY_POSITIVE_SUBORDINATOR = "SpectrallyPositiveSubordinator"
    INCONCLUSIVE = "Inconclusive"


##### REPORT TYPES #####


@dataclass
class RatioSample:
    x: float
    ratio_minus: float
    ratio_plus: float
    ratio_minus_shifted: float


@dataclass
class GridConfig:
    j_min: int = GRID_J_MIN
    j_max: int = GRID_J_MAX
    r_max: float = RATIO_R_MAX
    s_min: float = RATIO_S_MIN

    def grid(self):
        return dyadic_grid(self.j_min, self.j_max)


@dataclass
class ConditionFlags:

    """
    Per-condition outcomes

    limit_inf:            A/sqrt(U tail-) -> infinity
    limsup_inf:           limsup of the same ratio is infinite
    limsup_shifted_inf:   limsup A/(1 + sqrt(U tail-)) is infinite
    liminf_plus_finite:   liminf A/sqrt(U tail+) > -infinity
    limsup_minus_finite:  limsup A/sqrt(U tail-) < infinity
    """

    limit_inf: bool = False
    limsup_inf: bool = False
    limsup_shifted_inf: bool = False
    liminf_plus_finite: bool = True
    limsup_minus_finite: bool = True


@dataclass
class SubordinatorCheck:
    is_subordinator: bool
    drift: float
    drift_band: float
    A_nonneg: bool
    bv: bool
    sigma2_zero: bool


@dataclass
class CriterionReport:
    label: str
    verdict: Verdict
    flags: ConditionFlags
    slopes: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    oracle_verdict: Optional[Verdict] = None
    oracle_agrees: Optional[bool] = None
    heuristic_note: str = HEURISTIC_NOTE
    ratio_table: list = field(default_factory=list)
    subordinator: Optional[SubordinatorCheck] = None

    def to_dict(self):
        return {
            "label": self.label,
            "verdict": self.verdict.value,
            "flags": asdict(self.flags),
            "slopes": self.slopes,
            "diagnostics": self.diagnostics,
            "oracle_verdict": self.oracle_verdict.value if self.oracle_verdict else None,
            "oracle_agrees": self.oracle_agrees,
            "heuristic_note": self.heuristic_note,
            "subordinator": asdict(self.subordinator) if self.subordinator else None,
            "ratio_table": [asdict(r) for r in self.ratio_table],
        }


@dataclass
class WitnessSequence:
    x: list
    s: list
    t: list
    A: list
    t_tail_minus: list
    u_over_tA2: list
    tA_over_x: list

    def trends(self, start=2):

        """Monotone-trend checks from index start on (k >= start + 1)"""

        def strictly(values, increasing):
            values = values[start:]
            pairs = zip(values[:-1], values[1:])
            return all((b > a) if increasing else (b < a) for a, b in pairs)

        return {
            "t_tail_minus_decreasing": strictly(self.t_tail_minus, False),
            "u_over_tA2_decreasing": strictly(self.u_over_tA2, False),
            "tA_over_x_increasing": strictly(self.tA_over_x, True),
        }


##### RATIOS #####


def _ratio(numerator, denominator):

    """Ratio with +-inf sentinels for zero denominators, NaN for 0/0"""

    if denominator > 0:
        return numerator / denominator
    if numerator > 0:
        return math.inf
    if numerator < 0:
        return -math.inf
    return math.nan


def ratio_sample(record):
    root_minus = math.sqrt(max(record.U * record.tail_minus, 0.0))
    root_plus = math.sqrt(max(record.U * record.tail_plus, 0.0))

    return RatioSample(
        x=record.x,
        ratio_minus=_ratio(record.A, root_minus),
        ratio_plus=_ratio(record.A, root_plus),
        ratio_minus_shifted=record.A / (1.0 + root_minus),
    )


def ratio_table(model, x_grid):

    """
    Ratio samples on a decreasing grid

    Args:
        model: Validated LevyModel
        x_grid: Decreasing x values

    Returns:
        List of RatioSample, one per grid point
    """

    xs = [float(x) for x in x_grid]
    if any(b >= a for a, b in zip(xs[:-1], xs[1:])):
        raise ValueError("ratio grid must be strictly decreasing")

    return [ratio_sample(functionals(model, x)) for x in xs]


##### DIVERGENCE HEURISTICS #####


def _fit_slope(xs, values):

    """Least-squares slope of log|value| against log x, or None"""

    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = np.isfinite(values) & (values != 0)

    if keep.sum() < 3:
        return None

    log_x = np.log(xs[keep])
    if np.ptp(log_x) < 1e-3:
        return None

    slope, _ = np.polyfit(log_x, np.log(np.abs(values[keep])), 1)
    return float(slope)


def detect_limit_infinite(xs, values, r_max=RATIO_R_MAX, s_min=RATIO_S_MIN):

    """
    Whether values -> +infinity as x decreases along the grid

    Returns:
        (state, slope) with state True, False, or None when the slope fit is
        ill-conditioned and a verdict would be a guess
    """

    values = np.asarray(values, dtype=float)
    count = max(3, values.size // 4)
    trailing = values[-count:]
    trailing_x = np.asarray(xs, dtype=float)[-count:]

    if np.all(trailing == math.inf):
        return True, None
    if not np.all(trailing > r_max):
        return False, _fit_slope(trailing_x, trailing)

    half = max(3, values.size // 2)
    slope = _fit_slope(np.asarray(xs)[-half:], values[-half:])
    if slope is None:
        return None, None
    return slope <= -s_min, slope


def detect_limsup_infinite(xs, values, r_max=RATIO_R_MAX, s_min=RATIO_S_MIN):

    """Whether limsup of values is +infinity, from the running-maximum envelope"""

    values = np.asarray(values, dtype=float)
    envelope = np.maximum.accumulate(np.where(np.isnan(values), -math.inf, values))

    if envelope[-1] == math.inf:
        return True, None
    if not envelope[-1] > r_max:
        return False, None

    half = max(3, values.size // 2)
    slope = _fit_slope(np.asarray(xs)[-half:], envelope[-half:])
    if slope is None:
        return None, None
    return slope <= -s_min, slope


##### SUBORDINATORS #####


def _a_tolerance(model):
    return 1e-8 * (1.0 + abs(model.gamma) + model.tail_plus(1.0) + model.tail_minus(1.0))


def estimate_drift_at_zero(model, grid=None, a_values=None):

    """
    Extrapolate A(0+) from the three smallest grid points (Aitken delta-squared)

    Returns:
        (estimate, band) where band is the distance to the last grid value
    """

    if a_values is None:
        grid = dyadic_grid(GRID_J_MIN, GRID_J_MAX) if grid is None else grid
        a_values = [functionals(model, x).A for x in sorted(grid, reverse=True)[-3:]]

    a0, a1, a2 = a_values[-3:]
    second = (a2 - a1) - (a1 - a0)

    if second == 0 or not math.isfinite(second):
        estimate = a2
    else:
        estimate = a2 - (a2 - a1) ** 2 / second

    return estimate, abs(estimate - a2)


def subordinator_check(model, grid=None):

    """
    Decide whether a spectrally positive model is a subordinator

    Checks sigma^2 = 0, bounded variation of the positive side, A(0+) >= 0
    and A(x) >= 0 on the grid.
    """

    if not side_is_zero(model, MINUS):
        raise PreconditionError("subordinator_check needs tail_minus identically 0")

    grid = dyadic_grid(GRID_J_MIN, GRID_J_MAX) if grid is None else sorted(grid, reverse=True)
    a_values = [functionals(model, x).A for x in grid]
    tolerance = _a_tolerance(model)

    drift, band = estimate_drift_at_zero(model, a_values=a_values)
    sigma2_zero = model.sigma2 == 0
    bv = bounded_variation(model, PLUS)
    a_nonneg = min(a_values) >= -tolerance

    result = SubordinatorCheck(
        is_subordinator=bool(sigma2_zero and bv and a_nonneg and drift >= -max(band, tolerance)),
        drift=drift,
        drift_band=band,
        A_nonneg=bool(a_nonneg),
        bv=bool(bv),
        sigma2_zero=sigma2_zero,
    )

    logging.info(
        f"Subordinator check for '{model.label}': {result.is_subordinator} "
        f"(drift {drift:.6g} +- {band:.2g}, bv={bv}, A_nonneg={a_nonneg})"
    )
    return result


##### VERDICTS #####


def decide_verdict(flags, minus_zero, plus_zero, is_subordinator=False, mirror_is_subordinator=False):

    """
    Map condition flags to a verdict

    The negative-side counterpart of the positive conditions is read from
    liminf_plus_finite, or from the mirrored subordinator check when the
    positive tail vanishes.
    """

    if minus_zero:
        if is_subordinator:
            return Verdict.SPECTRALLY_POSITIVE_SUBORDINATOR
        if flags.liminf_plus_finite:
            return Verdict.STAYS_TWO_SIDED
        return Verdict.STAYS_NON_POSITIVE_SIDE

    negative = mirror_is_subordinator if plus_zero else not flags.liminf_plus_finite

    if flags.limit_inf:
        return Verdict.TENDS_POSITIVE
    if flags.limsup_shifted_inf:
        return Verdict.LINEAR_SUBSEQUENCE_DIVERGENCE
    if flags.limsup_inf:
        return Verdict.SUBSEQUENCE_POSITIVE if negative else Verdict.STAYS_NON_NEGATIVE_SIDE
    if negative:
        return Verdict.STAYS_NON_POSITIVE_SIDE
    return Verdict.STAYS_TWO_SIDED


def _apply_gaussian_remark(model, flags, diagnostics):

    """With sigma^2 > 0 and tail-(0+) > 0 no positive verdict is possible"""

    if model.sigma2 > 0 and not side_is_zero(model, MINUS):
        if flags.limit_inf or flags.limsup_inf or flags.limsup_shifted_inf:
            diagnostics["gaussian_remark"] = (
                "sigma2 > 0 with negative jumps: positive-side divergence flags cleared"
            )
        flags.limit_inf = False
        flags.limsup_inf = False
        flags.limsup_shifted_inf = False
        flags.limsup_minus_finite = True


def _power_subordinator(params):
    a_zero = drift_at_zero(params)
    return params["sigma2"] == 0 and a_zero is not None and a_zero >= -1e-12


def analytic_oracle(model):

    """
    Exact flags and verdict for untempered power-tail models

    Returns:
        Dict with 'flags' and 'verdict', or None for other models
    """

    params = stable_parameters(model)
    if params is None:
        return None

    minus_limit, shifted_limit = ratio_asymptote(params, MINUS)
    plus_limit, _ = ratio_asymptote(params, PLUS)

    flags = ConditionFlags(
        limit_inf=minus_limit == math.inf,
        limsup_inf=minus_limit == math.inf,
        limsup_shifted_inf=shifted_limit == math.inf,
        liminf_plus_finite=plus_limit > -math.inf,
        limsup_minus_finite=minus_limit < math.inf,
    )

    minus_zero = params["c_minus"] == 0
    plus_zero = params["c_plus"] == 0

    mirrored = dict(params, c_plus=params["c_minus"], c_minus=params["c_plus"], gamma=-params["gamma"])
    is_subordinator = minus_zero and _power_subordinator(params)
    mirror_is_subordinator = plus_zero and _power_subordinator(mirrored)

    if minus_zero:
        flags.limit_inf = flags.limsup_inf = is_subordinator
        flags.limsup_shifted_inf = False
        flags.limsup_minus_finite = not is_subordinator

    _apply_gaussian_remark(model, flags, {})

    return {
        "flags": flags,
        "verdict": decide_verdict(flags, minus_zero, plus_zero, is_subordinator, mirror_is_subordinator),
    }


def classify(model, grid_config=None):

    """
    Classify the small-time positivity behaviour of a model

    Args:
        model: LevyModel (validated here)
        grid_config: GridConfig with the dyadic grid and heuristic thresholds

    Returns:
        CriterionReport with verdict, flags, fitted slopes, ratio table and,
        for catalog-type models, the analytic oracle verdict
    """

    grid_config = grid_config or GridConfig()
    report_check = require_valid(model, allow_analytic_only=True)

    # Brownian motion: P(X_t > 0) -> 1/2 whatever the drift

    if report_check.analytic_only:
        logging.info(f"Model '{model.label}' is Brownian only; verdict is analytic")
        return CriterionReport(
            label=model.label,
            verdict=Verdict.STAYS_TWO_SIDED,
            flags=ConditionFlags(),
            diagnostics={"analytic_only": "Brownian motion: P(X_t > 0) -> 1/2"},
            oracle_verdict=Verdict.STAYS_TWO_SIDED,
            oracle_agrees=True,
        )

    grid = grid_config.grid()
    logging.info(
        f"Classifying '{model.label}' on 2^-j, j={grid_config.j_min}..{grid_config.j_max}"
    )

    records = [functionals(model, x) for x in grid]
    samples = [ratio_sample(r) for r in records]
    xs = [s.x for s in samples]

    flags = ConditionFlags()
    slopes = {}
    diagnostics = {"grid_points": len(grid)}

    minus_zero = side_is_zero(model, MINUS)
    plus_zero = side_is_zero(model, PLUS)
    subordinator = None
    mirror_subordinator = None
    ill_conditioned = []

    if len(grid) < MIN_GRID_POINTS:
        ill_conditioned.append(f"grid has {len(grid)} points, need {MIN_GRID_POINTS}")

    ratio_minus = [s.ratio_minus for s in samples]
    ratio_plus = [s.ratio_plus for s in samples]
    shifted = [s.ratio_minus_shifted for s in samples]
    r_max, s_min = grid_config.r_max, grid_config.s_min

    negated_plus = [-v for v in ratio_plus]
    state, slopes["ratio_plus_negated_envelope"] = detect_limsup_infinite(xs, negated_plus, r_max, s_min)
    if state is None:
        ill_conditioned.append("liminf of ratio_plus")
    flags.liminf_plus_finite = state is not True

    if minus_zero:
        subordinator = subordinator_check(model, grid)
        flags.limit_inf = flags.limsup_inf = subordinator.is_subordinator
        flags.limsup_minus_finite = not subordinator.is_subordinator
        diagnostics["drift_at_zero"] = subordinator.drift
        diagnostics["drift_band"] = subordinator.drift_band
    else:
        state, slopes["ratio_minus"] = detect_limit_infinite(xs, ratio_minus, r_max, s_min)
        if state is None:
            ill_conditioned.append("limit of ratio_minus")
        flags.limit_inf = state is True

        state, slopes["ratio_minus_envelope"] = detect_limsup_infinite(xs, ratio_minus, r_max, s_min)
        if state is None:
            ill_conditioned.append("limsup of ratio_minus")
        flags.limsup_inf = state is True or flags.limit_inf
        flags.limsup_minus_finite = not flags.limsup_inf

        state, slopes["ratio_minus_shifted_envelope"] = detect_limsup_infinite(xs, shifted, r_max, s_min)
        if state is None:
            ill_conditioned.append("limsup of ratio_minus_shifted")
        flags.limsup_shifted_inf = state is True

        if plus_zero:
            mirror_subordinator = subordinator_check(mirror_model(model), grid)
            diagnostics["mirror_is_subordinator"] = mirror_subordinator.is_subordinator

        diagnostics["two_sided_infinite_activity"] = side_has_infinite_activity(
            model, PLUS
        ) and side_has_infinite_activity(model, MINUS)

    _apply_gaussian_remark(model, flags, diagnostics)

    if ill_conditioned:
        verdict = Verdict.INCONCLUSIVE
        diagnostics["ill_conditioned"] = ill_conditioned
        logging.warning(f"Classification of '{model.label}' inconclusive: {ill_conditioned}")
    else:
        verdict = decide_verdict(
            flags,
            minus_zero,
            plus_zero,
            subordinator.is_subordinator if subordinator else False,
            mirror_subordinator.is_subordinator if mirror_subordinator else False,
        )

    # Catalog models: the closed-form asymptotics have the final word

    oracle = analytic_oracle(model)
    oracle_verdict = oracle["verdict"] if oracle else None
    oracle_agrees = None

    if oracle is not None:
        oracle_agrees = verdict == oracle_verdict
        if not oracle_agrees:
            logging.warning(
                f"Heuristic verdict {verdict.value} disagrees with analytic "
                f"{oracle_verdict.value} for '{model.label}'"
            )
            diagnostics["heuristic_verdict"] = verdict.value
            verdict = Verdict.INCONCLUSIVE

    logging.info(f"Verdict for '{model.label}': {verdict.value}")

    return CriterionReport(
        label=model.label,
        verdict=verdict,
        flags=flags,
        slopes=slopes,
        diagnostics=diagnostics,
        oracle_verdict=oracle_verdict,
        oracle_agrees=oracle_agrees,
        ratio_table=samples,
        subordinator=subordinator,
    )


##### WITNESS SEQUENCES #####


def witness_sequence(model, x_k):

    """
    Times t_k along which positivity is forced when ratio_minus diverges

    s_k = sqrt(U/(tail- A^2)) and t_k = sqrt(s_k / tail-) at each x_k. The
    linear-divergence case reuses the same construction along x_k with
    A(x_k) growing.

    Args:
        model: LevyModel
        x_k: Decreasing sequence with A(x_k) > 0 and tail-(x_k) > 0

    Returns:
        WitnessSequence with the three diagnostic sequences
    """

    out = WitnessSequence([], [], [], [], [], [], [])

    for k, x in enumerate(x_k, start=1):
        record = functionals(model, float(x))

        if record.A <= 0:
            raise PreconditionError(f"witness needs A(x_k) > 0; A={record.A:.6g} at k={k} (x={x:.6g})")
        if record.tail_minus <= 0:
            raise PreconditionError(f"witness needs tail_minus(x_k) > 0 at k={k} (x={x:.6g})")

        s = math.sqrt(record.U / (record.tail_minus * record.A**2))
        t = math.sqrt(s / record.tail_minus)

        out.x.append(float(x))
        out.s.append(s)
        out.t.append(t)
        out.A.append(record.A)
        out.t_tail_minus.append(t * record.tail_minus)
        out.u_over_tA2.append(record.U / (t * record.A**2))
        out.tA_over_x.append(t * record.A / x)

    return out
