# Tests for acceptance.py: the numbered criteria and the per-model checks
# Run with: pytest test_acceptance.py -v

import pytest
from acceptance import (
    AcceptanceSettings,
    CriterionResult,
    _timed,
    acceptance_report,
    bound_inputs,
    check_classifier,
    check_composite_bounds,
    check_determinism,
    check_identities,
    check_kolmogorov_scaling,
    check_linear_divergence,
    check_poisson_tail,
    check_quantiles,
    check_smoothing,
    check_two_sided_persistence,
    check_witness_positivity,
    run_acceptance,
    run_model_checks,
    strictly_stable_model,
    witness_payload,
    witness_run,
)
from catalog import catalog_names, stable_parameters, strictly_stable_center
from errors import PreconditionError
from levy_model import MINUS, PLUS
from report_helpers import kolmogorov_frame, witness_frame
from spec_helpers import build_model, catalog_model


@pytest.fixture(scope="module")
def settings():
    return AcceptanceSettings(n_samples=20_000, workers=2)


@pytest.fixture(scope="module")
def witness(settings):
    return witness_run(settings)


# ============================================================
# TESTS FOR the deterministic criteria
# ============================================================

class TestAnalyticCriteria:
    """Tests for criteria that need no simulation"""

    def test_identities(self):
        """Should hold both identities on every catalog model"""
        models = [catalog_model(name) for name in catalog_names(include_analytic_only=False)]
        result = check_identities(models)
        assert result.status == "pass"
        assert set(result.data) == set(catalog_names(include_analytic_only=False))
        assert all(0.0 <= v["density"] <= 1e-6 for v in result.data.values())

    def test_identities_without_density(self):
        """Should skip the density cross-check for table tails"""
        model = build_model(
            {
                "label": "table",
                "measure": {"kind": "table", "x": [1e-6, 1e-3, 1.0], "tail_plus": [1e3, 30.0, 1.0], "tail_minus": [1e3, 30.0, 1.0]},
            }
        )
        result = check_identities([model])
        assert result.data["table"]["density"] is None
        assert "on 0 models" in result.detail

    def test_quantiles(self):
        """Should bracket 1/t between tail(d) and tail(d-)"""
        models = [catalog_model(name) for name in catalog_names(include_analytic_only=False)]
        assert check_quantiles(models).status == "pass"

    def test_classifier(self):
        """Should reproduce every analytic verdict"""
        result = check_classifier()
        assert result.status == "pass"
        assert result.data["spectrally_negative_ratio_minus_at_1e-6"] == pytest.approx(1.0, abs=0.02)

    def test_poisson_tail(self):
        """Should match exact values and be monotone in mu"""
        assert check_poisson_tail().status == "pass"

    def test_smoothing(self):
        """Should shrink the smoothing error as n grows"""
        result = check_smoothing()
        assert result.status == "pass"
        assert all(len(errors) == 3 for errors in result.data.values())


# ============================================================
# TESTS FOR the simulation criteria
# ============================================================

class TestSimulationCriteria:
    """Tests for the Monte Carlo criteria at a reduced sample size"""

    def test_witness_positivity(self, settings, witness):
        """Should show P(X_t >= 0) increasing to above 0.99 along the witness times"""
        result = check_witness_positivity(settings, witness)
        assert result.status == "pass"
        assert result.data["trend"] == "increasing"
        assert len(result.data["t"]) == 5

    def test_witness_table(self, witness):
        """Should pair every witness time with its p_hat and interval"""
        frame = witness_frame(witness_payload(witness))
        assert len(frame) == 5
        assert list(frame["t"]) == list(witness["witness"].t)
        assert (frame["ci_low"] <= frame["p_hat"]).all() and (frame["p_hat"] <= frame["ci_high"]).all()

    def test_determinism(self, settings, witness):
        """Should write identical reports for identical seeds"""
        assert check_determinism(settings, witness).status == "pass"

    def test_strictly_stable_recentring(self):
        """Should move the centre of the spectrally negative model to 0"""
        model = strictly_stable_model("spectrally_negative_alpha15")
        assert model.gamma == pytest.approx(3.0)
        assert strictly_stable_center(stable_parameters(model)) == pytest.approx(0.0, abs=1e-12)

    def test_two_sided_persistence(self, settings):
        """Should keep 1/2 for symmetric Cauchy and 2/3 for the strictly stable spectrally negative model"""
        result = check_two_sided_persistence(settings)
        assert result.status == "pass"
        assert "99.9% Wilson intervals" in result.detail
        assert result.data["confidence"] == 0.999

    def test_linear_divergence(self, settings):
        """Should separate drift +1 from drift -1"""
        result = check_linear_divergence(settings)
        assert result.status == "pass"
        assert result.data["drift_minus"]["p_hat"] <= 0.01

    def test_bound_inputs(self):
        """Should meet t tail+(d+) = c+ and t tail-(d-) = c-"""
        model = catalog_model("drift_two_sided_alpha05")
        t = 1e-3
        d_plus, d_minus = bound_inputs(model, t, c_plus=1e-3, c_minus=40.0)
        assert t * model.tail(PLUS)(d_plus) == pytest.approx(1e-3, rel=1e-9)
        assert t * model.tail(MINUS)(d_minus) == pytest.approx(40.0, rel=1e-9)

    def test_composite_bounds(self, settings):
        """Should pass the composite lower bound on the bound cases"""
        result = check_composite_bounds(settings)
        assert result.status == "pass"
        assert len(result.data["cases"]) == 5

    def test_kolmogorov_scaling_rows(self, settings):
        """Should fit one constant per truncation level"""
        result = check_kolmogorov_scaling(settings)
        assert result.status in ("pass", "fail")
        assert len(result.data["rows"]) == 3
        assert list(kolmogorov_frame(result.data)["h"]) == [0.2, 0.1, 0.05]


# ============================================================
# TESTS FOR runners and reports
# ============================================================

class TestRunners:
    """Tests for run_acceptance, run_model_checks and the report"""

    def test_subset_of_criteria(self, settings):
        """Should run only the requested criteria, in order"""
        results = run_acceptance(settings, numbers=[10, 9])
        assert [r.number for r in results] == [9, 10]
        assert not any(r.hard_failure for r in results)

    def test_errors_become_failures(self):
        """Should turn a raised toolkit error into a failed result"""

        def broken():
            raise PreconditionError("no negative jumps")

        result = _timed(7, "broken", broken)
        assert result.status == "fail"
        assert result.detail == "error: no negative jumps"

    def test_brownian_model_checks(self, settings):
        """Should only classify an analytic-only model"""
        results = run_model_checks(catalog_model("brownian"), settings)
        assert [r.number for r in results] == [3]
        assert results[0].status == "pass"

    def test_drift_model_checks(self):
        """Should run every per-model check on a two-sided model"""
        results = run_model_checks(
            catalog_model("drift_two_sided_alpha05"), AcceptanceSettings(n_samples=2000, workers=2), [1e-3, 1e-2]
        )
        assert [r.number for r in results] == [1, 2, 3, 4, 5]
        assert all(r.status == "pass" for r in results)

    def test_report(self):
        """Should list the hard failures"""
        results = [CriterionResult(1, "a", "pass", ""), CriterionResult(2, "b", "fail", ""), CriterionResult(3, "c", "insufficient", "")]
        report = acceptance_report(results)
        assert report["hard_failures"] == [2]
        assert report["passed"] is False
        assert results[1].line().startswith("[        FAIL]  2. b")
