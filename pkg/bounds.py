# Explicit constants and probability lower bounds for small-time increments,
# with Monte Carlo verification against the simulator

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional
import numpy as np
from scipy import special, stats
from config import BOUND_MAX_SAMPLES, BOUND_START_SAMPLES
from errors import DegenerateBandError, PreconditionError
from levy_model import (
    MINUS,
    PLUS,
    check_side,
    jump_mean,
    side_has_infinite_activity,
    side_is_zero,
    truncated_moment,
)
from quadrature_helpers import integrate_to_zero
from simulator import (
    SimConfig,
    block_sizes,
    block_stream,
    estimate_event,
    sample_small_jump_component,
    wilson_interval,
)


# Relative slack on the tail-level inequalities, so quantile-based d values
# that meet them with equality are accepted

TAIL_LEVEL_TOLERANCE = 1e-9


##### CONFIG AND REPORT TYPES #####


@dataclass
class BoundConfig:

    """
    Constants of the composite bound

    K_plus / K_minus default to the smallest admissible value for (kappa, C);
    explicit values below that are rejected.
    """

    kappa_plus: float = 2.0
    kappa_minus: float = 2.0
    C: float = 1.0
    c_plus: float = 1.0
    c_minus: float = 1.0
    L: float = 0.0
    K_plus: Optional[float] = None
    K_minus: Optional[float] = None

    def __post_init__(self):
        if self.kappa_plus <= 0 or self.kappa_minus <= 0:
            raise ValueError("kappa+ and kappa- must be positive")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.c_plus < 0 or self.c_minus <= 0 or self.L < 0:
            raise ValueError("need c+ >= 0, c- > 0 and L >= 0")

        for name, kappa in (("K_plus", self.kappa_plus), ("K_minus", self.kappa_minus)):
            smallest = winsor_constant(kappa, self.C)
            value = getattr(self, name)
            if value is None:
                setattr(self, name, smallest)
            elif value < smallest * (1 - 1e-12):
                raise PreconditionError(
                    f"{name}={value:.6g} is below the admissible {smallest:.6g} for kappa={kappa}, C={self.C}"
                )


@dataclass
class SmallJumpCheck:
    side: str
    d: float
    K: float
    threshold: float
    target: float
    p_hat: float
    ci: tuple
    n: int
    passed: bool
    C: float


@dataclass
class CompositeBound:
    variant: str
    threshold: float
    rhs: float
    K_plus: float
    K_minus: float
    terms: dict = field(default_factory=dict)


@dataclass
class BoundCheck:
    inputs: dict
    threshold: float
    rhs: float
    p_hat: Optional[float]
    ci: Optional[tuple]
    n: int
    status: str  # "pass", "fail" or "insufficient"

    def to_dict(self):
        return asdict(self)


@dataclass
class KolmogorovScaling:
    rows: list
    spread: float

    def c_hats(self):
        return [row["c_hat"] for row in self.rows]


##### CONSTANTS #####


def winsor_constant(kappa, C):

    """
    Smallest K with K >= 4C max(kappa/Phi(-kappa), 1/(Phi(-kappa) sqrt(1 - Phi(-kappa)/2)))
    """

    if kappa <= 0 or C <= 0:
        raise ValueError("winsor_constant needs kappa > 0 and C > 0")

    p = stats.norm.cdf(-kappa)
    return 4.0 * C * max(kappa / p, 1.0 / (p * math.sqrt(1.0 - p / 2.0)))


def poisson_tail(mu, k):

    """
    P(N(mu) >= k) for a Poisson variable with mean mu

    Uses the regularised lower incomplete gamma function, which equals the
    upper tail of the Poisson distribution at integer k.
    """

    if mu < 0 or k < 0:
        raise ValueError("poisson_tail needs mu >= 0 and k >= 0")

    k = int(math.ceil(k))
    if k == 0:
        return 1.0
    if mu == 0:
        return 0.0
    return float(special.gammainc(k, mu))


def composite_rhs(c_plus, kappa_plus, kappa_minus, c_minus, k_total):

    """e^(-c+) Phi(-kappa+) Phi(-kappa-) P(N(c-) >= k_total) / 8"""

    return (
        math.exp(-c_plus)
        * stats.norm.cdf(-kappa_plus)
        * stats.norm.cdf(-kappa_minus)
        * poisson_tail(c_minus, k_total)
        / 8.0
    )


def berry_esseen_bound(model, band, t, x, C=1.0):

    """
    Non-uniform normal-approximation bound for the Gaussian part plus the
    compensated jumps inside (-h_minus, h_plus)

    Args:
        model: LevyModel
        band: (h_minus, h_plus); 0 on a side excludes that side
        t: Time (> 0)
        x: Point of the standardised CDF
        C: Absolute constant (unknown, configured)

    Returns:
        C m3 / (sqrt(t) (sigma^2 + m2)^(3/2) (1 + |x|)^3)
    """

    h_minus, h_plus = band
    m2 = truncated_moment(model, PLUS, h_plus, 2) + truncated_moment(model, MINUS, h_minus, 2)
    m3 = truncated_moment(model, PLUS, h_plus, 3) + truncated_moment(model, MINUS, h_minus, 3)

    variance = model.sigma2 + m2
    if variance <= 0:
        raise DegenerateBandError(f"degenerate band {band}: sigma2 + m2 = 0")

    return C * m3 / (math.sqrt(t) * variance**1.5 * (1.0 + abs(x)) ** 3)


def _nu(model, side, d):

    """Integral of y over (d, 1] against one half-measure, signed for d > 1"""

    if d <= 1.0:
        return jump_mean(model, side, d, 1.0)
    return -jump_mean(model, side, 1.0, d)


##### COMPONENT SAMPLING #####


def _sample_component(model, side, t, h, cfg):
    pieces = [
        sample_small_jump_component(model, side, t, h, cfg, block_stream(cfg.master_seed, block), size)
        for block, size in enumerate(block_sizes(cfg))
    ]
    return np.concatenate(pieces)


def small_jump_bound_check(model, side, d, kappa, C, t, cfg):

    """
    Empirical check of P(component <= K d - kappa sqrt(t V(d))) >= Phi(-kappa)/2

    The component is the compensated sum of the jumps of one side with
    magnitude at most d.
    """

    check_side(side)
    if d <= 0:
        raise ValueError("d must be positive")

    K = winsor_constant(kappa, C)
    variance = truncated_moment(model, side, d, 2)
    threshold = K * d - kappa * math.sqrt(t * variance)
    target = stats.norm.cdf(-kappa) / 2.0

    if variance == 0:
        # Component is identically 0 <= threshold
        p_hat, ci, n = 1.0, (1.0, 1.0), 0
    else:
        values = _sample_component(model, side, t, d, cfg)
        n = values.size
        successes = int(np.count_nonzero(values <= threshold))
        p_hat = successes / n
        ci = wilson_interval(successes, n)

    slack = ci[1] - ci[0]
    result = SmallJumpCheck(
        side=side,
        d=d,
        K=K,
        threshold=threshold,
        target=target,
        p_hat=p_hat,
        ci=ci,
        n=n,
        passed=p_hat >= target - slack,
        C=C,
    )

    logging.info(
        f"Small-jump bound on side '{side}' of '{model.label}' (d={d:g}, C={C:g}): "
        f"p_hat={p_hat:.5f} vs target {target:.5f} -> {'pass' if result.passed else 'fail'}"
    )
    return result


##### COMPOSITE BOUNDS #####


def _check_tail_levels(model, t, d_plus, d_minus, config, need_minus=True):
    if not side_is_zero(model, PLUS):
        level = t * float(model.tail_plus(d_plus))
        if level > config.c_plus * (1 + TAIL_LEVEL_TOLERANCE):
            logging.error(f"Tail level fails on the + side: t*tail+(d+)={level:.6g} > c+={config.c_plus}")
            raise PreconditionError(
                f"side '+': t*tail_plus(d_plus)={level:.6g} exceeds c_plus={config.c_plus}"
            )

    if need_minus:
        level = t * float(model.tail_minus.left_limit(d_minus))
        if level < config.c_minus * (1 - TAIL_LEVEL_TOLERANCE):
            logging.error(f"Tail level fails on the - side: t*tail-(d-)={level:.6g} < c-={config.c_minus}")
            raise PreconditionError(
                f"side '-': t*tail_minus(d_minus-)={level:.6g} is below c_minus={config.c_minus}"
            )


def composite_lower_bound(model, t, d_plus, d_minus, config, variant="two_sided"):

    """
    Threshold and lower bound for P(X_t <= threshold)

    Args:
        model: LevyModel
        t: Time (> 0)
        d_plus, d_minus: Levels with t*tail_plus(d_plus) <= c+ and t*tail_minus(d_minus-) >= c-
        config: BoundConfig
        variant: "two_sided" for the Poisson-count bound, "finite_negative"
            when tail_minus(0+) < infinity (d_minus is then unused)

    Returns:
        CompositeBound
    """

    if t <= 0:
        raise ValueError("t must be positive")

    plus_zero = side_is_zero(model, PLUS)
    K_plus, K_minus = config.K_plus, config.K_minus

    if variant == "finite_negative":
        if side_has_infinite_activity(model, MINUS):
            raise PreconditionError("finite_negative bound needs tail_minus(0+) < infinity")
        if not side_has_infinite_activity(model, PLUS):
            raise PreconditionError("finite_negative bound needs tail_plus(0+) = infinity")

        _check_tail_levels(model, t, d_plus, None, config, need_minus=False)

        if side_is_zero(model, MINUS):
            nu_minus_zero = 0.0
        else:
            tail_minus = model.tail_minus
            nu_minus_zero = integrate_to_zero(tail_minus, 1.0) - float(tail_minus(1.0))

        terms = {
            "drift": t * model.gamma,
            "nu_plus": -t * _nu(model, PLUS, d_plus),
            "nu_minus": t * nu_minus_zero,
            "K_plus_d_plus": K_plus * d_plus,
            "kappa_plus_term": -config.kappa_plus * math.sqrt(t * truncated_moment(model, PLUS, d_plus, 2)),
        }
        rhs = math.exp(-config.c_plus) * stats.norm.cdf(-config.kappa_plus) / 4.0

    elif variant == "two_sided":
        if side_is_zero(model, MINUS):
            raise PreconditionError("two_sided bound needs negative jumps")

        _check_tail_levels(model, t, d_plus, d_minus, config)

        terms = {
            "drift": t * model.gamma,
            "nu_minus": t * _nu(model, MINUS, d_minus),
            "L_d_minus": -config.L * d_minus,
            "kappa_minus_term": -config.kappa_minus
            * math.sqrt(t * truncated_moment(model, MINUS, d_minus, 2)),
        }

        # With no positive jumps every "+" term vanishes and c+ = 0
        c_plus = 0.0 if plus_zero else config.c_plus
        if not plus_zero:
            terms["nu_plus"] = -t * _nu(model, PLUS, d_plus)
            terms["K_plus_d_plus"] = K_plus * d_plus
            terms["kappa_plus_term"] = -config.kappa_plus * math.sqrt(
                t * truncated_moment(model, PLUS, d_plus, 2)
            )

        rhs = composite_rhs(c_plus, config.kappa_plus, config.kappa_minus, config.c_minus, K_minus + config.L)

    else:
        raise ValueError(f"unknown bound variant '{variant}'")

    threshold = sum(terms.values())

    return CompositeBound(
        variant=variant,
        threshold=threshold,
        rhs=rhs,
        K_plus=K_plus,
        K_minus=K_minus,
        terms=terms,
    )


def verify_composite_bound(
    model, t, d_plus, d_minus, config, sim_cfg, variant="two_sided", max_samples=BOUND_MAX_SAMPLES
):

    """
    Simulate P(X_t <= threshold) and compare with the lower bound

    The sample size starts at BOUND_START_SAMPLES and grows fourfold until
    the Wilson interval is narrower than rhs/2; past max_samples the case is
    reported as insufficient rather than passed.
    """

    bound = composite_lower_bound(model, t, d_plus, d_minus, config, variant)
    inputs = {
        "model": model.label,
        "t": t,
        "d_plus": d_plus,
        "d_minus": d_minus,
        "variant": variant,
        "kappa_plus": config.kappa_plus,
        "kappa_minus": config.kappa_minus,
        "C": config.C,
        "c_plus": config.c_plus,
        "c_minus": config.c_minus,
        "L": config.L,
        "K_plus": bound.K_plus,
        "K_minus": bound.K_minus,
    }

    n = BOUND_START_SAMPLES
    estimate = None

    while n <= max_samples:
        cfg = SimConfig(
            h_plus=sim_cfg.h_plus,
            h_minus=sim_cfg.h_minus,
            epsilon=sim_cfg.epsilon,
            gaussian_surrogate=sim_cfg.gaussian_surrogate,
            n_samples=n,
            master_seed=sim_cfg.master_seed,
            workers=sim_cfg.workers,
            block_size=sim_cfg.block_size,
        )
        estimate = estimate_event(
            model, t, cfg, lambda batch: batch.x_t <= bound.threshold, "bound", {"threshold": bound.threshold}
        )
        width = estimate.ci_high - estimate.ci_low

        if width < bound.rhs / 2.0:
            status = "pass" if estimate.p_hat >= bound.rhs - 3.0 * width else "fail"
            logging.info(
                f"Composite bound for '{model.label}' at t={t:g}: p_hat={estimate.p_hat:.6g} "
                f"vs rhs={bound.rhs:.4g} -> {status}"
            )
            return BoundCheck(
                inputs,
                bound.threshold,
                bound.rhs,
                estimate.p_hat,
                (estimate.ci_low, estimate.ci_high),
                n,
                status,
            )

        n *= 4

    logging.warning(
        f"Composite bound for '{model.label}' at t={t:g}: CI never narrower than rhs/2 "
        f"(rhs={bound.rhs:.3g}), reported as insufficient"
    )
    return BoundCheck(
        inputs,
        bound.threshold,
        bound.rhs,
        estimate.p_hat if estimate else None,
        (estimate.ci_low, estimate.ci_high) if estimate else None,
        estimate.n if estimate else 0,
        "insufficient",
    )


##### KOLMOGOROV SCALING #####


def kolmogorov_scaling(model, t, h_values, cfg, side=PLUS):

    """
    Kolmogorov distance of the standardised small-jump component to N(0, 1)

    For each h the fitted constant is c_hat = D / (h / sqrt(t V(h))); the
    spread max/min of c_hat measures how well the bound shape fits.
    """

    rows = []

    for h in h_values:
        variance = model.sigma2 + truncated_moment(model, side, h, 2)
        if variance <= 0:
            raise DegenerateBandError(f"degenerate band at h={h}")

        values = _sample_component(model, side, t, h, cfg)
        if model.sigma2 > 0:
            # Gaussian part on its own stream, clear of the block indices
            gaussian = block_stream(cfg.master_seed, 10**6 + len(rows))
            values = values + math.sqrt(model.sigma2 * t) * gaussian.standard_normal(values.size)

        standardised = values / math.sqrt(t * variance)
        distance = float(stats.kstest(standardised, "norm").statistic)
        scale = h / math.sqrt(t * variance)

        rows.append({"h": h, "distance": distance, "scale": scale, "c_hat": distance / scale})
        logging.info(f"Kolmogorov distance at h={h:g}: {distance:.4f} (c_hat={distance / scale:.4g})")

    c_hats = [row["c_hat"] for row in rows]
    spread = max(c_hats) / min(c_hats) if min(c_hats) > 0 else math.inf
    return KolmogorovScaling(rows=rows, spread=spread)
