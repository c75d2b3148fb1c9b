# Catalog of named process specs with closed-form asymptotics
# Every entry has untempered power tails, so A, U and the stable law of X_t
# are known exactly and serve as oracles for the numerical paths

import math
from tail_helpers import PowerTail


##### CATALOG SPECS #####


def _stable_spec(label, gamma, alpha, c_plus, c_minus, sigma2=0.0):
    return {
        "label": label,
        "gamma": gamma,
        "sigma2": sigma2,
        "measure": {"kind": "stable_tails", "alpha": alpha, "c_plus": c_plus, "c_minus": c_minus},
    }


CATALOG = {
    "symmetric_stable_alpha1": _stable_spec("symmetric_stable_alpha1", 0.0, 1.0, 1.0, 1.0),
    "drift_two_sided_alpha05": _stable_spec("drift_two_sided_alpha05", 1.0, 0.5, 1.0, 1.0),
    "negative_drift_two_sided_alpha05": _stable_spec(
        "negative_drift_two_sided_alpha05", -1.0, 0.5, 1.0, 1.0
    ),
    "spectrally_negative_alpha15": _stable_spec("spectrally_negative_alpha15", 0.0, 1.5, 0.0, 1.0),
    "subordinator_alpha05": _stable_spec("subordinator_alpha05", 1.0, 0.5, 1.0, 0.0),
    "positive_alpha05_no_drift": _stable_spec("positive_alpha05_no_drift", 0.0, 0.5, 1.0, 0.0),
    "spectrally_positive_alpha15": _stable_spec("spectrally_positive_alpha15", 0.0, 1.5, 1.0, 0.0),
    "symmetric_stable_alpha05": _stable_spec("symmetric_stable_alpha05", 0.0, 0.5, 1.0, 1.0),
    "brownian": {
        "label": "brownian",
        "gamma": 0.0,
        "sigma2": 1.0,
        "measure": {"kind": "none"},
    },
}

# Entries with Pi = 0 are only usable by the analytic simulator path

ANALYTIC_ONLY = {"brownian"}


def catalog_names(include_analytic_only=True):
    if include_analytic_only:
        return list(CATALOG)
    return [name for name in CATALOG if name not in ANALYTIC_ONLY]


##### CLOSED FORMS #####


def stable_parameters(model):

    """
    Power-law parameters of a model, or None when the tails are not
    untempered power laws sharing one index

    Returns:
        Dict with alpha, c_plus, c_minus, gamma, sigma2
    """

    alphas = []
    coefficients = []

    for tail in (model.tail_plus, model.tail_minus):
        if getattr(tail, "is_zero", False):
            coefficients.append(0.0)
            continue
        if not isinstance(tail, PowerTail) or tail.tempering > 0:
            return None
        alphas.append(tail.alpha)
        coefficients.append(tail.c)

    if not alphas or len(set(alphas)) > 1:
        return None

    return {
        "alpha": alphas[0],
        "c_plus": coefficients[0],
        "c_minus": coefficients[1],
        "gamma": model.gamma,
        "sigma2": model.sigma2,
    }


def analytic_A(params, x):

    """A(x) for power tails on (0, 1]"""

    alpha, gamma = params["alpha"], params["gamma"]
    diff = params["c_plus"] - params["c_minus"]

    if alpha == 1.0:
        return gamma + diff * (1.0 + math.log(x))

    center = gamma + diff * alpha / (alpha - 1.0)
    return center - diff * x ** (1.0 - alpha) / (alpha - 1.0)


def analytic_U(params, x):

    """U(x) for power tails on (0, 1]"""

    alpha = params["alpha"]
    total = params["c_plus"] + params["c_minus"]
    return params["sigma2"] + 2.0 * total * x ** (2.0 - alpha) / (2.0 - alpha)


def drift_at_zero(params):

    """A(0+) for alpha < 1 (the drift of the bounded-variation process)"""

    alpha = params["alpha"]
    if alpha >= 1.0:
        return None
    return params["gamma"] - (params["c_plus"] - params["c_minus"]) * alpha / (1.0 - alpha)


def strictly_stable_center(params):

    """
    Drift m such that X_t - t*m is strictly stable

    For alpha = 1 this exists only for symmetric tails, where m = gamma.
    """

    alpha = params["alpha"]
    diff = params["c_plus"] - params["c_minus"]
    if alpha == 1.0:
        return params["gamma"] if diff == 0 else None
    return params["gamma"] + diff * alpha / (alpha - 1.0)


def stable_scale(params):

    """
    Scale and skewness of X_1 - m in the S1 parametrisation

    Returns:
        Tuple (scale, beta)
    """

    alpha = params["alpha"]
    total = params["c_plus"] + params["c_minus"]
    beta = (params["c_plus"] - params["c_minus"]) / total

    if alpha == 1.0:
        return total * math.pi / 2.0, beta

    scale_alpha = total * math.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0)
    return abs(scale_alpha) ** (1.0 / alpha), beta


def ratio_asymptote(params, side):

    """
    Limit as x -> 0 of A(x)/sqrt(U(x) tail(x)) and A(x)/(1 + sqrt(U(x) tail(x)))

    Returns:
        Tuple (ratio_limit, shifted_limit), each +inf, -inf, or a finite value
    """

    alpha, sigma2 = params["alpha"], params["sigma2"]
    c_side = params["c_plus"] if side == "+" else params["c_minus"]
    diff = params["c_plus"] - params["c_minus"]

    # Leading term of A: coefficient, exponent of x, and a log flag

    if diff == 0:
        a_coef, a_exp, a_log = params["gamma"], 0.0, False
    elif alpha < 1.0:
        a_zero = drift_at_zero(params)
        if a_zero != 0:
            a_coef, a_exp, a_log = a_zero, 0.0, False
        else:
            a_coef, a_exp, a_log = diff / (1.0 - alpha), 1.0 - alpha, False
    elif alpha == 1.0:
        a_coef, a_exp, a_log = -diff, 0.0, True
    else:
        a_coef, a_exp, a_log = -diff / (alpha - 1.0), 1.0 - alpha, False

    def limit_of(coef, exponent, log_growth, denominator_limit):
        if coef == 0:
            return 0.0
        if exponent > 0:
            return 0.0
        if exponent < 0 or log_growth:
            return math.copysign(math.inf, coef)
        return coef / denominator_limit

    if c_side == 0:
        ratio = 0.0 if a_coef == 0 else math.copysign(math.inf, a_coef)
        shifted = limit_of(a_coef, a_exp, a_log, 1.0)
        return ratio, shifted

    # Leading term of sqrt(U * tail)

    if sigma2 > 0:
        d_coef, d_exp = math.sqrt(sigma2 * c_side), -alpha / 2.0
    else:
        total = params["c_plus"] + params["c_minus"]
        d_coef, d_exp = math.sqrt(2.0 * total * c_side / (2.0 - alpha)), 1.0 - alpha

    ratio = limit_of(a_coef, a_exp - d_exp, a_log, d_coef)

    if d_exp > 0:
        shifted = limit_of(a_coef, a_exp, a_log, 1.0)
    elif d_exp == 0:
        shifted = limit_of(a_coef, a_exp, a_log, 1.0 + d_coef)
    else:
        shifted = ratio

    return ratio, shifted
