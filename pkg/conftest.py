# Shared pytest fixtures: catalog models and a strictly stable CDF oracle

import math
import pytest
from scipy import stats
from catalog import stable_parameters, stable_scale, strictly_stable_center
from config import DEFAULT_SEED
from simulator import SimConfig
from spec_helpers import build_model, catalog_model


def power_model(gamma=0.0, alpha=0.5, c_plus=1.0, c_minus=1.0, sigma2=0.0, label="power"):
    return build_model(
        {
            "label": label,
            "gamma": gamma,
            "sigma2": sigma2,
            "measure": {"kind": "stable_tails", "alpha": alpha, "c_plus": c_plus, "c_minus": c_minus},
        }
    )


def stable_cdf(model, t, x):

    """
    P(X_t <= x) for an untempered power-tail model with alpha != 1

    X_t has the law of t*m + t^(1/alpha) * S with S stable in the S1
    parametrisation, which is what scipy.stats.levy_stable uses by default.
    """

    params = stable_parameters(model)
    alpha = params["alpha"]
    center = strictly_stable_center(params)
    scale, beta = stable_scale(params)

    loc = t * center
    return float(
        stats.levy_stable.cdf(x, alpha, beta, loc=loc, scale=scale * t ** (1.0 / alpha))
    )


@pytest.fixture
def drift_model():
    return catalog_model("drift_two_sided_alpha05")


@pytest.fixture
def negative_drift_model():
    return catalog_model("negative_drift_two_sided_alpha05")


@pytest.fixture
def symmetric_cauchy():
    return catalog_model("symmetric_stable_alpha1")


@pytest.fixture
def spectrally_negative():
    return catalog_model("spectrally_negative_alpha15")


@pytest.fixture
def subordinator():
    return catalog_model("subordinator_alpha05")


@pytest.fixture
def one_sided_no_drift():
    return catalog_model("positive_alpha05_no_drift")


@pytest.fixture
def brownian():
    return catalog_model("brownian")


@pytest.fixture
def sim_config():
    return SimConfig(n_samples=20_000, master_seed=DEFAULT_SEED, workers=2)


@pytest.fixture
def oracle_cdf():
    return stable_cdf


def wilson_halfwidth(p, n, z=1.96):
    return z * math.sqrt(p * (1.0 - p) / n)
