# Monte Carlo simulation of small-time increments X_t
# X_t = t*gamma - t*nu+(h+) + t*nu-(h-) + sigma*sqrt(t)*G
#       + compensated jumps in (eps, h] + sub-eps part + jumps above h, per side

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional
import numpy as np
from scipy import stats
from config import (
    BISECTION_ITERATIONS,
    BLOCK_SIZE,
    CONFIDENCE,
    DEFAULT_SEED,
    JUMP_BUDGET,
    MAX_JUMPS_PER_BLOCK,
    MIN_SAMPLES,
    SURROGATE_ERROR_TARGET,
    WORKERS,
)
from errors import BisectionError, PreconditionError, SimulationBudgetError
from levy_model import (
    MINUS,
    PLUS,
    SIDES,
    bounded_variation,
    jump_mean,
    nu_pm,
    require_valid,
    side_has_infinite_activity,
    side_is_zero,
    solve_tail_levels,
    truncated_moment,
)


##### CONFIG AND RESULT TYPES #####


@dataclass
class SimConfig:

    """
    Simulation settings

    epsilon=None picks the small-jump cutoff automatically per (model, t).
    """

    h_plus: float = 1.0
    h_minus: float = 1.0
    epsilon: Optional[float] = None
    gaussian_surrogate: bool = True
    n_samples: int = 100_000
    master_seed: int = DEFAULT_SEED
    t_values: list = field(default_factory=list)
    workers: int = WORKERS
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if not (0 < self.h_plus <= 1 and 0 < self.h_minus <= 1):
            raise ValueError("truncation levels h+ and h- must lie in (0, 1]")
        if self.epsilon is not None and not 0 < self.epsilon < min(self.h_plus, self.h_minus):
            raise ValueError("epsilon must lie in (0, min(h+, h-))")
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"n_samples must be at least {MIN_SAMPLES}")
        if self.workers < 1 or self.block_size < 1:
            raise ValueError("workers and block_size must be positive")

    def h(self, side):
        return self.h_plus if side == PLUS else self.h_minus

    def echo(self):
        return {
            "h_plus": self.h_plus,
            "h_minus": self.h_minus,
            "epsilon": self.epsilon,
            "gaussian_surrogate": self.gaussian_surrogate,
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "block_size": self.block_size,
        }


@dataclass
class IncrementSample:
    x_t: float
    max_jump_plus: float
    max_jump_minus: float


@dataclass
class IncrementBatch:
    x_t: np.ndarray
    max_jump_plus: np.ndarray
    max_jump_minus: np.ndarray

    def __getitem__(self, i):
        return IncrementSample(
            float(self.x_t[i]), float(self.max_jump_plus[i]), float(self.max_jump_minus[i])
        )


@dataclass
class Estimate:
    p_hat: float
    n: int
    ci_low: float
    ci_high: float
    successes: int = 0
    estimator: str = ""
    t: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "t": self.t,
            "n": self.n,
            "p_hat": self.p_hat,
            "ci": [self.ci_low, self.ci_high],
            "successes": self.successes,
            "estimator": self.estimator,
            "details": self.details,
        }


@dataclass
class SidePlan:

    """Sampling plan for one half of the measure"""

    side: str
    sign: float
    h: float
    epsilon: float
    tail_h: float
    tail_eps: float
    big_rate: float
    band_rate: float
    band_compensator: float
    small_variance: float
    mode: str  # "gaussian", "mean" (bounded variation) or "dropped"


@dataclass
class TruncationPlan:
    t: float
    drift: float
    gaussian_scale: float
    epsilon: float
    sides: list
    error_term: float = 0.0
    dropped_std: float = 0.0
    budget_raised: bool = False
    analytic_only: bool = False

    @property
    def expected_jumps(self):
        return sum(s.big_rate + s.band_rate for s in self.sides)

    def summary(self):
        return {
            "epsilon": self.epsilon,
            "error_term": self.error_term,
            "dropped_std": self.dropped_std,
            "budget_raised": self.budget_raised,
            "expected_jumps": self.expected_jumps,
            "small_jump_modes": {s.side: s.mode for s in self.sides},
            "analytic_only": self.analytic_only,
        }


##### STREAMS #####


def block_stream(master_seed, block):

    """Independent generator for one block, keyed by (master_seed, block)"""

    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, block])))


def wilson_interval(successes, n, confidence=CONFIDENCE):

    """
    Wilson score interval for a binomial proportion

    Returns:
        (low, high), always containing successes / n
    """

    if n <= 0:
        return 0.0, 1.0

    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p_hat = successes / n
    denominator = 1.0 + z**2 / n
    center = (p_hat + z**2 / (2.0 * n)) / denominator
    margin = (z / denominator) * math.sqrt(p_hat * (1.0 - p_hat) / n + z**2 / (4.0 * n**2))

    low = min(max(0.0, center - margin), p_hat)
    high = max(min(1.0, center + margin), p_hat)
    return low, high


##### TRUNCATION PLANNING #####


def _error_ratio(model, side, t, eps):
    variance = t * truncated_moment(model, side, eps, 2)
    if variance <= 0:
        return math.inf
    return eps / math.sqrt(variance)


def _largest_eps(predicate, eps_max, iterations=200):

    """Largest eps in (0, eps_max] satisfying a predicate that holds near 0"""

    if predicate(eps_max):
        return eps_max

    log_lo, log_hi = math.log(eps_max) - 230.0, math.log(eps_max)
    if not predicate(math.exp(log_lo)):
        raise BisectionError("no small-jump cutoff satisfies the error target")

    for _ in range(iterations):
        mid = 0.5 * (log_lo + log_hi)
        if predicate(math.exp(mid)):
            log_lo = mid
        else:
            log_hi = mid
        if log_hi - log_lo < 1e-12:
            break

    return math.exp(log_lo)


def choose_epsilon(model, t, cfg, sides=SIDES):

    """
    Automatic small-jump cutoff

    Largest eps with eps/sqrt(t V_side(eps)) <= the error target on each side
    with infinite activity, then raised until the expected number of jumps
    per increment fits the jump budget.

    Returns:
        (epsilon, error_term, budget_raised)
    """

    active = [side for side in sides if side_has_infinite_activity(model, side)]
    eps_max = 0.5 * min(cfg.h(side) for side in sides if not side_is_zero(model, side))

    eps = eps_max
    for side in active:
        eps = min(
            eps,
            _largest_eps(lambda e, s=side: _error_ratio(model, s, t, e) <= SURROGATE_ERROR_TARGET, eps_max),
        )

    def expected_jumps(e):
        return t * sum(float(model.tail(side)(e)) for side in sides if not side_is_zero(model, side))

    budget_raised = False
    if expected_jumps(eps) > JUMP_BUDGET:
        budget_raised = True
        raised = _smallest_eps(lambda e: expected_jumps(e) <= JUMP_BUDGET, eps, eps_max)
        logging.warning(
            f"Jump budget {JUMP_BUDGET:g} forces epsilon up from {eps:.3g} to {raised:.3g} at t={t:g}"
        )
        eps = raised

    error_term = max((_error_ratio(model, side, t, eps) for side in active), default=0.0)
    return eps, error_term, budget_raised


def _smallest_eps(predicate, lo, hi, iterations=200):

    """Smallest eps in [lo, hi] satisfying a predicate that holds at hi"""

    if not predicate(hi):
        raise SimulationBudgetError(
            "expected jump count exceeds the budget even at the largest cutoff; use larger h"
        )

    log_lo, log_hi = math.log(lo), math.log(hi)
    for _ in range(iterations):
        mid = 0.5 * (log_lo + log_hi)
        if predicate(math.exp(mid)):
            log_hi = mid
        else:
            log_lo = mid
        if log_hi - log_lo < 1e-12:
            break

    return math.exp(log_hi)


def _side_plan(model, side, t, h, eps, surrogate):
    tail = model.tail(side)
    tail_h = float(tail(h))
    tail_eps = float(tail(eps))
    small_variance = t * truncated_moment(model, side, eps, 2)

    if bounded_variation(model, side):
        mode = "mean"
    elif surrogate:
        mode = "gaussian"
    else:
        mode = "dropped"

    return SidePlan(
        side=side,
        sign=1.0 if side == PLUS else -1.0,
        h=h,
        epsilon=eps,
        tail_h=tail_h,
        tail_eps=tail_eps,
        big_rate=t * tail_h,
        band_rate=t * max(tail_eps - tail_h, 0.0),
        band_compensator=t * jump_mean(model, side, eps, h),
        small_variance=small_variance,
        mode=mode,
    )


def plan_truncation(model, t, cfg):

    """
    Fix epsilon, rates and compensators for one (model, t, cfg)

    Returns:
        TruncationPlan shared by every block of the run
    """

    if t <= 0:
        raise ValueError("t must be positive")

    # Brownian only: sampled exactly
    if side_is_zero(model, PLUS) and side_is_zero(model, MINUS):
        return TruncationPlan(
            t=t,
            drift=t * model.gamma,
            gaussian_scale=math.sqrt(model.sigma2 * t),
            epsilon=0.0,
            sides=[],
            analytic_only=True,
        )

    if cfg.epsilon is None:
        eps, error_term, budget_raised = choose_epsilon(model, t, cfg)
    else:
        eps, budget_raised = cfg.epsilon, False
        error_term = max(
            (_error_ratio(model, side, t, eps) for side in SIDES if side_has_infinite_activity(model, side)),
            default=0.0,
        )

    sides = [
        _side_plan(model, side, t, cfg.h(side), eps, cfg.gaussian_surrogate)
        for side in SIDES
        if not side_is_zero(model, side)
    ]

    big_rate = sum(s.big_rate for s in sides)
    if big_rate > JUMP_BUDGET:
        logging.error(f"Poisson mean {big_rate:.3g} of big jumps too large at t={t:g}")
        raise SimulationBudgetError(
            f"expected {big_rate:.3g} jumps above h at t={t:g}; use larger h or smaller t"
        )

    expected = sum(s.big_rate + s.band_rate for s in sides)
    if expected * cfg.block_size > MAX_JUMPS_PER_BLOCK:
        raise SimulationBudgetError(
            f"expected {expected:.3g} jumps per increment at t={t:g}; use a larger epsilon"
        )

    nu_plus, nu_minus = nu_pm(model, cfg.h_plus)[0], nu_pm(model, cfg.h_minus)[1]
    dropped = [s.small_variance for s in sides if s.mode != "gaussian"]

    return TruncationPlan(
        t=t,
        drift=t * model.gamma - t * nu_plus + t * nu_minus,
        gaussian_scale=math.sqrt(model.sigma2 * t),
        epsilon=eps,
        sides=sides,
        error_term=error_term,
        dropped_std=math.sqrt(sum(dropped)),
        budget_raised=budget_raised,
    )


##### SAMPLING #####


def inverse_tail(model, side, levels, lo, hi=None):

    """
    Jump magnitudes x with tail(x) = level, for levels in [tail(hi), tail(lo))

    Power tails use the closed form; other tails use log-space bisection
    with a fixed iteration count.
    """

    tail = model.tail(side)
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        return levels

    roots = np.asarray(tail.inverse(levels), dtype=float)
    missing = ~np.isfinite(roots)

    if np.any(missing):
        upper = hi
        if upper is None:
            floor = float(levels[missing].min())
            upper = max(2.0 * lo, 2.0)
            steps = 0
            while tail(upper) > floor:
                upper *= 2.0
                steps += 1
                if steps > 2000:
                    raise BisectionError(f"tail never falls to {floor:.3g}")
        roots[missing] = solve_tail_levels(tail, levels[missing], lo, upper, BISECTION_ITERATIONS)

    if hi is not None:
        roots = np.minimum(roots, hi)
    return np.maximum(roots, lo)


def _jump_sums(model, plan_side, stream, size, lower, upper, rate, level_hi, level_lo):

    """Compound Poisson sums of magnitudes in (lower, upper] and per-sample maxima"""

    counts = stream.poisson(rate, size)
    total = int(counts.sum())
    sums = np.zeros(size)
    maxima = np.zeros(size)

    if total == 0:
        return sums, maxima

    owners = np.repeat(np.arange(size), counts)
    u = 1.0 - stream.random(total)
    levels = level_hi + u * (level_lo - level_hi)
    magnitudes = inverse_tail(model, plan_side.side, levels, lower, upper)

    sums = np.bincount(owners, weights=magnitudes, minlength=size)
    np.maximum.at(maxima, owners, magnitudes)
    return sums, maxima


def _sample_side(model, plan_side, stream, size, include_big=True):
    band_sum, band_max = _jump_sums(
        model,
        plan_side,
        stream,
        size,
        plan_side.epsilon,
        plan_side.h,
        plan_side.band_rate,
        plan_side.tail_h,
        plan_side.tail_eps,
    )
    values = band_sum - plan_side.band_compensator
    maxima = band_max

    if include_big:
        big_sum, big_max = _jump_sums(
            model, plan_side, stream, size, plan_side.h, None, plan_side.big_rate, 0.0, plan_side.tail_h
        )
        values = values + big_sum
        maxima = np.maximum(maxima, big_max)

    values = plan_side.sign * values
    if plan_side.mode == "gaussian" and plan_side.small_variance > 0:
        values = values + math.sqrt(plan_side.small_variance) * stream.standard_normal(size)

    return values, maxima


def sample_increments(model, t, cfg, stream, size, plan=None):

    """
    Vectorised sampler of X_t with its largest positive and negative jumps

    Args:
        model: Validated LevyModel (or Brownian only)
        t: Time (> 0)
        cfg: SimConfig
        stream: numpy Generator
        size: Number of increments
        plan: Optional precomputed TruncationPlan

    Returns:
        IncrementBatch
    """

    plan = plan or plan_truncation(model, t, cfg)

    x_t = np.full(size, plan.drift)
    if plan.gaussian_scale > 0:
        x_t = x_t + plan.gaussian_scale * stream.standard_normal(size)

    max_plus = np.zeros(size)
    max_minus = np.zeros(size)

    for plan_side in plan.sides:
        values, maxima = _sample_side(model, plan_side, stream, size)
        x_t = x_t + values
        if plan_side.side == PLUS:
            max_plus = maxima
        else:
            max_minus = maxima

    return IncrementBatch(x_t=x_t, max_jump_plus=max_plus, max_jump_minus=max_minus)


def sample_increment(model, t, cfg, stream):
    return sample_increments(model, t, cfg, stream, 1)[0]


def sample_small_jump_component(model, side, t, h, cfg, stream, size, epsilon=None):

    """
    Compensated sum of the jumps of one side with magnitude in (0, h]

    Signed like the jumps themselves; the sub-epsilon part follows the same
    rules as in sample_increments.
    """

    if side_is_zero(model, side):
        return np.zeros(size)

    if epsilon is None:
        single = SimConfig(
            h_plus=h,
            h_minus=h,
            n_samples=max(cfg.n_samples, MIN_SAMPLES),
            gaussian_surrogate=cfg.gaussian_surrogate,
        )
        epsilon, _, _ = choose_epsilon(model, t, single, sides=(side,))
    epsilon = min(epsilon, 0.5 * h)

    plan_side = _side_plan(model, side, t, h, epsilon, cfg.gaussian_surrogate)
    values, _ = _sample_side(model, plan_side, stream, size, include_big=False)
    return values


##### ESTIMATORS #####


def block_sizes(cfg):
    full, rest = divmod(cfg.n_samples, cfg.block_size)
    return [cfg.block_size] * full + ([rest] if rest else [])


def _count_events(model, t, cfg, event, plan):

    """Count event hits over all blocks; each block owns its stream"""

    sizes = block_sizes(cfg)

    def run_block(block):
        stream = block_stream(cfg.master_seed, block)
        batch = sample_increments(model, t, cfg, stream, sizes[block], plan)
        return int(np.count_nonzero(event(batch)))

    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        counts = list(executor.map(run_block, range(len(sizes))))

    return sum(counts)


def estimate_event(model, t, cfg, event, name, extra=None, plan=None):

    """
    Estimate P(event) for an event on IncrementBatch

    Args:
        event: Function mapping an IncrementBatch to a boolean array
        name: Estimator name carried into the Estimate
        extra: Details merged into the Estimate
        plan: Optional precomputed TruncationPlan

    Returns:
        Estimate with Wilson interval and the truncation summary
    """

    plan = plan or plan_truncation(model, t, cfg)
    successes = _count_events(model, t, cfg, event, plan)
    low, high = wilson_interval(successes, cfg.n_samples)

    details = plan.summary()
    details.update(extra or {})

    estimate = Estimate(
        p_hat=successes / cfg.n_samples,
        n=cfg.n_samples,
        ci_low=low,
        ci_high=high,
        successes=successes,
        estimator=name,
        t=t,
        details=details,
    )

    logging.info(
        f"{name} for '{model.label}' at t={t:g}: p_hat={estimate.p_hat:.5f} "
        f"[{low:.5f}, {high:.5f}] (n={cfg.n_samples}, eps={plan.epsilon:.3g})"
    )
    return estimate


def _require_model(model):
    return require_valid(model, allow_analytic_only=True)


def estimate_positive_prob(model, t, cfg):

    """P(X_t >= 0); ties at 0 count as positive"""

    _require_model(model)
    return estimate_event(model, t, cfg, lambda batch: batch.x_t >= 0.0, "positive")


def estimate_ratio_divergence(model, t, M, cfg):

    """
    P(X_t >= M * max(largest negative jump, eps))

    Negative jumps below eps are not tracked, so the denominator is floored
    at eps; the floor only makes the event harder to hit.
    """

    _require_model(model)
    if side_is_zero(model, MINUS):
        raise PreconditionError("ratio event needs negative jumps (tail_minus not identically 0)")
    if M < 0:
        raise ValueError("M must be non-negative")

    plan = plan_truncation(model, t, cfg)
    floor = plan.epsilon

    def event(batch):
        return batch.x_t >= M * np.maximum(batch.max_jump_minus, floor)

    return estimate_event(model, t, cfg, event, "ratio", {"M": M, "epsilon_floor": floor}, plan)


def estimate_linear_divergence(model, t, M, cfg):

    """P(X_t >= M * t)"""

    _require_model(model)
    if M < 0:
        raise ValueError("M must be non-negative")
    return estimate_event(model, t, cfg, lambda batch: batch.x_t >= M * t, "linear", {"M": M})


ESTIMATORS = {
    "positive": lambda model, t, cfg, M=None: estimate_positive_prob(model, t, cfg),
    "ratio": lambda model, t, cfg, M=10.0: estimate_ratio_divergence(model, t, M, cfg),
    "linear": lambda model, t, cfg, M=1.0: estimate_linear_divergence(model, t, M, cfg),
}


@dataclass
class EstimateSeries:
    estimator: str
    estimates: list
    trend: str

    def rows(self):
        return [
            [e.t, e.n, e.p_hat, e.ci_low, e.ci_high, self.estimator] for e in self.estimates
        ]


def estimate_along(model, t_values, estimator, cfg, M=None):

    """
    Run one estimator along a sequence of times

    The trend statement describes the finite sequence in the given order
    ("increasing", "decreasing", "flat" within CIs, or "mixed") and makes
    no claim about a limit.
    """

    run = ESTIMATORS[estimator]
    kwargs = {} if M is None else {"M": M}
    estimates = [run(model, float(t), cfg, **kwargs) for t in t_values]

    diffs = [b.p_hat - a.p_hat for a, b in zip(estimates[:-1], estimates[1:])]
    overlaps = [
        a.ci_low <= b.ci_high and b.ci_low <= a.ci_high for a, b in zip(estimates[:-1], estimates[1:])
    ]

    if not diffs or all(overlaps):
        trend = "flat"
    elif all(d >= 0 for d in diffs):
        trend = "increasing"
    elif all(d <= 0 for d in diffs):
        trend = "decreasing"
    else:
        trend = "mixed"

    logging.info(f"{estimator} along {len(estimates)} times for '{model.label}': {trend}")
    return EstimateSeries(estimator=estimator, estimates=estimates, trend=trend)
