# Unit tests for simulator.py
# Run with: pytest test_simulator.py -v

import math
import numpy as np
import pytest
from config import DEFAULT_SEED, JUMP_BUDGET, SURROGATE_ERROR_TARGET
from errors import PreconditionError
from levy_model import PLUS
from simulator import (
    IncrementSample,
    SimConfig,
    block_stream,
    choose_epsilon,
    estimate_along,
    estimate_linear_divergence,
    estimate_positive_prob,
    estimate_ratio_divergence,
    plan_truncation,
    sample_increment,
    sample_increments,
    sample_small_jump_component,
    wilson_interval,
)


# ============================================================
# TESTS FOR SimConfig
# ============================================================

class TestSimConfig:
    """Tests for simulation settings validation"""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_samples": 50},
            {"h_plus": 0.0},
            {"h_minus": 1.5},
            {"epsilon": 1.0},
            {"workers": 0},
        ],
    )
    def test_rejects_bad_settings(self, kwargs):
        """Should raise ValueError for settings outside their ranges"""
        with pytest.raises(ValueError):
            SimConfig(**kwargs)

    def test_echo_carries_seed(self):
        """Should echo the master seed and sample count"""
        echo = SimConfig(n_samples=1000, master_seed=7).echo()
        assert echo["master_seed"] == 7
        assert echo["n_samples"] == 1000


# ============================================================
# TESTS FOR wilson_interval
# ============================================================

class TestWilsonInterval:
    """Tests for the binomial confidence interval"""

    def test_contains_estimate(self):
        """Should always contain successes / n"""
        for successes in (0, 1, 37, 99, 100):
            low, high = wilson_interval(successes, 100)
            assert low <= successes / 100 <= high

    def test_extremes(self):
        """Should reach 0 and 1 at the ends"""
        assert wilson_interval(0, 100)[0] == 0.0
        assert wilson_interval(100, 100)[1] == 1.0
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_shrinks_with_n(self):
        """Should narrow as n grows"""
        low_small, high_small = wilson_interval(50, 100)
        low_big, high_big = wilson_interval(5000, 10000)
        assert high_big - low_big < high_small - low_small


# ============================================================
# TESTS FOR truncation planning
# ============================================================

class TestTruncationPlan:
    """Tests for choose_epsilon and plan_truncation"""

    def test_error_target_met(self, spectrally_negative):
        """Should place epsilon where the error ratio hits the target"""
        eps, error_term, raised = choose_epsilon(spectrally_negative, 0.01, SimConfig())
        assert not raised
        assert error_term <= SURROGATE_ERROR_TARGET
        assert error_term == pytest.approx(SURROGATE_ERROR_TARGET, rel=1e-3)
        assert eps == pytest.approx(1.78e-3, rel=1e-2)

    def test_jump_budget_raises_epsilon(self, drift_model):
        """Should raise epsilon until t * (tail+ + tail-)(eps) fits the budget"""
        t = 0.01
        eps, error_term, raised = choose_epsilon(drift_model, t, SimConfig())
        assert raised
        assert eps == pytest.approx((2.0 * t / JUMP_BUDGET) ** 2, rel=1e-6)
        assert error_term > SURROGATE_ERROR_TARGET

    def test_brownian_plan_is_exact(self, brownian):
        """Should sample Brownian motion without jump sides"""
        plan = plan_truncation(brownian, 0.5, SimConfig())
        assert plan.analytic_only
        assert plan.sides == []
        assert plan.gaussian_scale == pytest.approx(math.sqrt(0.5))

    def test_small_jump_modes(self, drift_model, spectrally_negative):
        """Should keep the mean for bounded variation and a Gaussian otherwise"""
        assert set(plan_truncation(drift_model, 0.01, SimConfig()).summary()["small_jump_modes"].values()) == {"mean"}
        assert plan_truncation(spectrally_negative, 0.01, SimConfig()).summary()["small_jump_modes"] == {"-": "gaussian"}

    def test_rejects_non_positive_t(self, drift_model):
        """Should need t > 0"""
        with pytest.raises(ValueError):
            plan_truncation(drift_model, 0.0, SimConfig())


# ============================================================
# TESTS FOR sampling
# ============================================================

class TestSampling:
    """Tests for sample_increments and the small-jump component"""

    def test_subordinator_increments_positive(self, subordinator):
        """Should give strictly positive increments with no negative jumps"""
        batch = sample_increments(subordinator, 0.01, SimConfig(), block_stream(DEFAULT_SEED, 0), 5000)
        assert np.all(batch.x_t > 0)
        assert np.all(batch.max_jump_minus == 0)

    def test_single_increment(self, drift_model):
        """Should return one IncrementSample"""
        sample = sample_increment(drift_model, 0.01, SimConfig(), block_stream(DEFAULT_SEED, 0))
        assert isinstance(sample, IncrementSample)
        assert sample.max_jump_plus >= 0 and sample.max_jump_minus >= 0

    def test_compensated_component_has_zero_mean(self, drift_model):
        """Should center the jumps in (0, h] on their compensator"""
        t, size = 0.01, 20_000
        values = sample_small_jump_component(
            drift_model, PLUS, t, 1.0, SimConfig(), block_stream(DEFAULT_SEED, 3), size
        )
        std = math.sqrt(t / 3.0)
        assert abs(values.mean()) < 5.0 * std / math.sqrt(size)

    def test_zero_side_component(self, subordinator):
        """Should return zeros for an empty side"""
        values = sample_small_jump_component(
            subordinator, "-", 0.01, 1.0, SimConfig(), block_stream(DEFAULT_SEED, 0), 10
        )
        assert np.all(values == 0)


# ============================================================
# TESTS FOR estimators
# ============================================================

class TestEstimators:
    """Tests for the Monte Carlo probability estimators"""

    def test_brownian_half(self, brownian, sim_config):
        """Should give P(X_t >= 0) near 1/2 for Brownian motion"""
        estimate = estimate_positive_prob(brownian, 0.1, sim_config)
        assert estimate.p_hat == pytest.approx(0.5, abs=0.02)
        assert estimate.ci_low <= estimate.p_hat <= estimate.ci_high

    def test_subordinator_always_positive(self, subordinator, sim_config):
        """Should give p_hat = 1 for a subordinator"""
        assert estimate_positive_prob(subordinator, 0.01, sim_config).p_hat == 1.0

    def test_drift_model_tends_positive(self, drift_model, sim_config):
        """Should give P(X_t < 0) of order sqrt(t)"""
        estimate = estimate_positive_prob(drift_model, 1e-4, sim_config)
        assert estimate.p_hat > 0.97

    def test_spectrally_negative_matches_stable_law(self, spectrally_negative, sim_config, oracle_cdf):
        """Should agree with the exact stable CDF"""
        t = 0.01
        estimate = estimate_positive_prob(spectrally_negative, t, sim_config)
        exact = 1.0 - oracle_cdf(spectrally_negative, t, 0.0)
        assert estimate.p_hat == pytest.approx(exact, abs=0.02)

    def test_ratio_needs_negative_jumps(self, one_sided_no_drift, sim_config):
        """Should refuse the ratio event without negative jumps"""
        with pytest.raises(PreconditionError):
            estimate_ratio_divergence(one_sided_no_drift, 0.01, 10.0, sim_config)

    def test_negative_multiplier_rejected(self, drift_model, sim_config):
        """Should need M >= 0"""
        with pytest.raises(ValueError):
            estimate_linear_divergence(drift_model, 0.01, -1.0, sim_config)

    def test_ratio_details(self, drift_model, sim_config):
        """Should record M and the epsilon floor"""
        estimate = estimate_ratio_divergence(drift_model, 1e-3, 10.0, sim_config)
        assert estimate.details["M"] == 10.0
        assert estimate.details["epsilon_floor"] > 0
        assert estimate.to_dict()["estimator"] == "ratio"

    def test_truncation_level_does_not_change_estimate(self, symmetric_cauchy, sim_config):
        """Should agree within overlapping 99% intervals for h = 0.5 and h = 0.25"""
        intervals = []
        for h in (0.5, 0.25):
            cfg = SimConfig(h_plus=h, h_minus=h, n_samples=sim_config.n_samples, workers=2)
            estimate = estimate_positive_prob(symmetric_cauchy, 1e-3, cfg)
            intervals.append(wilson_interval(estimate.successes, estimate.n, 0.99))
        (low_a, high_a), (low_b, high_b) = intervals
        assert low_a <= high_b and low_b <= high_a

    def test_dropped_small_jumps_converge_to_surrogate(self, symmetric_cauchy, sim_config):
        """Should match the Gaussian surrogate once epsilon is small enough to drop the sub-epsilon part"""
        t = 1e-4
        on = estimate_positive_prob(symmetric_cauchy, t, sim_config)
        low_on, high_on = wilson_interval(on.successes, on.n, 0.99)
        for eps in (1e-5, 5e-6, 2.5e-6):
            cfg = SimConfig(epsilon=eps, gaussian_surrogate=False, n_samples=sim_config.n_samples, workers=2)
            plan = plan_truncation(symmetric_cauchy, t, cfg)
            assert {side.mode for side in plan.sides} == {"dropped"}
            off = estimate_positive_prob(symmetric_cauchy, t, cfg)
            low_off, high_off = wilson_interval(off.successes, off.n, 0.99)
            assert low_off <= high_on and low_on <= high_off

    def test_worker_count_does_not_change_result(self, drift_model):
        """Should give identical counts for any number of workers"""
        one = SimConfig(n_samples=20_000, block_size=4096, workers=1)
        many = SimConfig(n_samples=20_000, block_size=4096, workers=4)
        assert (
            estimate_positive_prob(drift_model, 0.01, one).successes
            == estimate_positive_prob(drift_model, 0.01, many).successes
        )


# ============================================================
# TESTS FOR estimate_along
# ============================================================

class TestEstimateAlong:
    """Tests for estimator series and their trend statement"""

    def test_increasing_trend(self, drift_model, sim_config):
        """Should report an increasing P(X_t >= 0) as t decreases"""
        series = estimate_along(drift_model, [1e-1, 1e-2, 1e-3, 1e-4], "positive", sim_config)
        assert series.trend == "increasing"
        assert len(series.rows()) == 4

    def test_brownian_flat(self, brownian, sim_config):
        """Should report a flat series for Brownian motion"""
        series = estimate_along(brownian, [1e-1, 1e-2, 1e-3], "positive", sim_config)
        assert series.trend == "flat"
        assert len({e.p_hat for e in series.estimates}) == 1
