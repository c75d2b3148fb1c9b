# Unit tests for levy_model.py, tail_helpers.py and spec_helpers.py
# Run with: pytest test_levy_model.py -v

import math
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from catalog import analytic_A, analytic_U, stable_parameters
from conftest import power_model
from errors import ModelValidationError, PreconditionError, QuantileUndefinedError, SpecParseError
from levy_model import (
    MINUS,
    PLUS,
    FUNCTIONAL_COLUMNS,
    LevyModel,
    bounded_variation,
    density_cross_check,
    functional_table,
    functionals,
    jump_mean,
    mirror_model,
    nu_pm,
    require_valid,
    smooth_measure,
    tail_quantile,
    truncated_moment,
    validate_model,
)
from spec_helpers import build_model, check_run_config, load_process_spec, parse_grid, parse_t_values
from tail_helpers import CallableTail, PowerTail, TableTail, ZeroTail


def table_model(values_plus, x=None, interpolation="loglinear", label="table"):
    x = x if x is not None else [1e-6, 1e-4, 1e-2, 1.0]
    return LevyModel(
        gamma=0.0,
        sigma2=0.0,
        tail_plus=TableTail(x, values_plus, interpolation),
        tail_minus=ZeroTail(),
        label=label,
    )


# ============================================================
# TESTS FOR validate_model
# ============================================================

class TestValidateModel:
    """Tests for the standing-assumption checks"""

    def test_power_tails_pass(self):
        """Should accept two-sided power tails x^(-1/2)"""
        report = validate_model(power_model())
        assert report.passed
        assert not report.analytic_only

    def test_finite_activity_rejected(self):
        """Should reject a bounded tail as compound Poisson"""
        model = LevyModel(0.0, 0.0, CallableTail(lambda x: min(1.0, 1.0 / x)), ZeroTail(), label="cp")
        report = validate_model(model)
        assert not report.passed
        failed = {c.name: c.detail for c in report.failures()}
        assert "compound Poisson excluded" in failed["infinite_activity"]

    def test_non_square_integrable_rejected(self):
        """Should report U(1) divergence for tail x^(-2.5)"""
        model = LevyModel(0.0, 0.0, CallableTail(lambda x: x**-2.5), ZeroTail(), label="heavy")
        report = validate_model(model)
        names = [c.name for c in report.failures()]
        assert "U1_finite" in names

    def test_non_monotone_table_rejected(self):
        """Should name the offending pair when a table tail increases"""
        model = table_model([1e3, 1e2, 5e2, 1.0])
        report = validate_model(model)
        failed = {c.name: c.detail for c in report.failures()}
        assert "tail increases" in failed["tail_plus_monotone"]

    def test_brownian_is_analytic_only(self, brownian):
        """Should mark sigma2 > 0 with no jumps as analytic-only"""
        report = validate_model(brownian)
        assert report.analytic_only
        assert not report.passed

    def test_require_valid_raises_with_report(self):
        """Should raise ModelValidationError carrying the report"""
        model = table_model([1e3, 1e2, 5e2, 1.0])
        with pytest.raises(ModelValidationError) as info:
            require_valid(model)
        assert info.value.report is not None
        assert not info.value.report.passed

    def test_require_valid_allows_brownian_when_asked(self, brownian):
        """Should let analytic-only models through on request"""
        assert require_valid(brownian, allow_analytic_only=True).analytic_only
        with pytest.raises(ModelValidationError):
            require_valid(brownian)

    def test_report_to_dict(self):
        """Should serialise every check"""
        data = validate_model(power_model()).to_dict()
        assert data["passed"] is True
        assert {c["name"] for c in data["checks"]} >= {"infinite_activity", "U1_finite"}


# ============================================================
# TESTS FOR functionals
# ============================================================

class TestFunctionals:
    """Tests for nu, A, V, U on power tails"""

    def test_one_sided_quarter(self, one_sided_no_drift):
        """Should match A = 2 sqrt(x) - 1, U = (4/3) x^1.5, V = x^1.5 / 3 at x = 0.25"""
        r = functionals(one_sided_no_drift, 0.25)
        assert r.A == pytest.approx(0.0, abs=1e-9)
        assert r.nu == pytest.approx(-0.5, abs=1e-9)
        assert r.U == pytest.approx(1.0 / 6.0, rel=1e-8)
        assert r.V == pytest.approx(1.0 / 24.0, rel=1e-8)
        assert r.U - r.V == pytest.approx(0.125, rel=1e-8)

    def test_one_sided_at_one(self, one_sided_no_drift):
        """Should give A = 1, U = 4/3, V = 1/3 at x = 1"""
        r = functionals(one_sided_no_drift, 1.0)
        assert r.A == pytest.approx(1.0, abs=1e-9)
        assert r.U == pytest.approx(4.0 / 3.0, rel=1e-8)
        assert r.V == pytest.approx(1.0 / 3.0, rel=1e-8)

    def test_symmetric_model_has_zero_A(self, symmetric_cauchy):
        """Should give A = 0 everywhere when gamma = 0 and c+ = c-"""
        for x in (1e-8, 1e-4, 0.3, 1.0, 5.0):
            assert functionals(symmetric_cauchy, x).A == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 1.5, 1.8])
    def test_matches_closed_forms(self, alpha):
        """Should agree with closed-form A and U on (0, 1]"""
        model = power_model(gamma=0.7, alpha=alpha, c_plus=2.0, c_minus=0.5)
        params = stable_parameters(model)
        for x in (1e-7, 1e-3, 0.2, 1.0):
            r = functionals(model, x)
            assert r.A == pytest.approx(analytic_A(params, x), rel=1e-7, abs=1e-9)
            assert r.U == pytest.approx(analytic_U(params, x), rel=1e-7)

    def test_rejects_non_positive_x(self, drift_model):
        """Should reject x <= 0"""
        with pytest.raises(ValueError):
            functionals(drift_model, 0.0)

    def test_tempered_tail_above_one(self):
        """Should integrate the tempered part beyond 1 continuously"""
        model = build_model(
            {
                "label": "tempered",
                "measure": {"kind": "stable_tails", "alpha": 0.5, "c_plus": 1.0, "c_minus": 1.0, "tempering": 2.0},
            }
        )
        below = functionals(model, 1.0 - 1e-9)
        above = functionals(model, 1.0 + 1e-9)
        assert above.U == pytest.approx(below.U, rel=1e-6)
        assert above.A == pytest.approx(below.A, abs=1e-6)

    def test_functional_table_frame(self, drift_model):
        """Should build a decreasing grid with the declared columns"""
        table = functional_table(drift_model, [0.5, 0.25, 1.0, 0.125])
        assert table.grid == [1.0, 0.5, 0.25, 0.125]
        frame = table.to_frame()
        assert list(frame.columns) == FUNCTIONAL_COLUMNS
        assert len(frame) == 4

    @settings(max_examples=60, deadline=None)
    @given(
        alpha=st.floats(0.1, 1.9),
        c_plus=st.floats(0.0, 3.0),
        c_minus=st.floats(0.1, 3.0),
        gamma=st.floats(-2.0, 2.0),
        x=st.floats(1e-6, 2.0),
    )
    def test_integration_by_parts_identity(self, alpha, c_plus, c_minus, gamma, x):
        """Should satisfy A = nu + x (tail+ - tail-) and U = V + x^2 tail"""
        model = power_model(gamma=gamma, alpha=alpha, c_plus=c_plus, c_minus=c_minus)
        r = functionals(model, x)
        assert abs(r.A - r.nu - x * (r.tail_plus - r.tail_minus)) <= 1e-8 * (1.0 + abs(r.A))
        assert abs(r.U - r.V - x * x * (r.tail_plus + r.tail_minus)) <= 1e-8 * (1.0 + r.U)


# ============================================================
# TESTS FOR nu_pm, truncated_moment, jump_mean
# ============================================================

class TestTruncatedMoments:
    """Tests for the truncated first and higher moments"""

    def test_nu_pm_quarter(self, one_sided_no_drift):
        """Should give nu+ = 1 - sqrt(h) and nu- = 0"""
        nu_plus, nu_minus = nu_pm(one_sided_no_drift, 0.25)
        assert nu_plus == pytest.approx(0.5, rel=1e-9)
        assert nu_minus == 0.0

    def test_nu_pm_at_one_is_zero(self, drift_model):
        """Should vanish on the empty interval (1, 1]"""
        assert nu_pm(drift_model, 1.0) == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_nu_pm_symmetric(self, drift_model):
        """Should give equal sides for c+ = c-"""
        nu_plus, nu_minus = nu_pm(drift_model, 0.01)
        assert nu_plus == pytest.approx(nu_minus, rel=1e-12)

    def test_nu_pm_rejects_h_above_one(self, drift_model):
        """Should raise a domain error for h > 1"""
        with pytest.raises(PreconditionError):
            nu_pm(drift_model, 1.5)

    def test_second_and_third_moments(self, one_sided_no_drift):
        """Should give h^1.5 / 3 and h^2.5 / 5 for alpha = 0.5"""
        h = 0.3
        assert truncated_moment(one_sided_no_drift, PLUS, h, 2) == pytest.approx(h**1.5 / 3.0, rel=1e-9)
        assert truncated_moment(one_sided_no_drift, PLUS, h, 3) == pytest.approx(h**2.5 / 5.0, rel=1e-9)
        assert truncated_moment(one_sided_no_drift, MINUS, h, 2) == 0.0

    def test_quadrature_path_matches_power_law(self):
        """Should reproduce the power-law moment through a table tail"""
        x = np.geomspace(1e-8, 1.0, 30)
        model = table_model(x**-0.5, x=x)
        assert truncated_moment(model, PLUS, 0.5, 2) == pytest.approx(0.5**1.5 / 3.0, rel=1e-6)

    def test_jump_mean_alpha_one(self, symmetric_cauchy):
        """Should give c ln(hi / lo) for alpha = 1"""
        assert jump_mean(symmetric_cauchy, PLUS, 0.01, 1.0) == pytest.approx(math.log(100.0), rel=1e-12)


# ============================================================
# TESTS FOR tail_quantile
# ============================================================

class TestTailQuantile:
    """Tests for d(lam t) = inf{x : tail(x) <= 1/(lam t)}"""

    def test_power_tail_quantile(self, drift_model):
        """Should give d = t^2 for tail x^(-1/2)"""
        assert tail_quantile(drift_model, 0.1, PLUS) == pytest.approx(0.01, rel=1e-9)

    def test_scaled_quantile(self, drift_model):
        """Should give d = (lam t)^2 with lam = 4"""
        assert tail_quantile(drift_model, 0.1, PLUS, lam=4.0) == pytest.approx(0.16, rel=1e-9)

    def test_empty_side_undefined(self, subordinator):
        """Should raise 'quantile undefined' for an empty side"""
        with pytest.raises(QuantileUndefinedError, match="quantile undefined"):
            tail_quantile(subordinator, 0.1, MINUS)

    def test_bisection_bracketing_on_table(self):
        """Should bracket t tail(d) <= 1 <= t tail(d-) for a table tail"""
        x = np.geomspace(1e-8, 1.0, 17)
        model = table_model(2.0 * x**-0.75, x=x)
        for t in (1e-1, 1e-3, 1e-5):
            d = tail_quantile(model, t, PLUS)
            assert t * model.tail_plus(d) <= 1.0 + 1e-6
            assert t * model.tail_plus.left_limit(d) >= 1.0 - 1e-6

    def test_rejects_bad_time(self, drift_model):
        """Should reject t <= 0"""
        with pytest.raises(ValueError):
            tail_quantile(drift_model, 0.0, PLUS)


# ============================================================
# TESTS FOR bounded_variation, mirror_model, density_cross_check
# ============================================================

class TestModelHelpers:
    """Tests for the smaller model operations"""

    def test_bounded_variation_power(self, subordinator, spectrally_negative):
        """Should decide alpha < 1 as bounded variation"""
        assert bounded_variation(subordinator, PLUS)
        assert not bounded_variation(spectrally_negative, MINUS)
        assert bounded_variation(spectrally_negative, PLUS)

    @pytest.mark.parametrize("alpha,expected", [(0.5, True), (1.5, False)])
    def test_bounded_variation_table(self, alpha, expected):
        """Should decide table tails from the dyadic increments"""
        x = np.geomspace(1e-8, 1.0, 30)
        assert bounded_variation(table_model(x**-alpha, x=x), PLUS) is expected

    def test_mirror_negates_A(self):
        """Should flip the sign of A and swap the tails"""
        model = power_model(gamma=0.3, alpha=0.7, c_plus=2.0, c_minus=0.5)
        mirrored = mirror_model(model)
        assert mirrored.gamma == -0.3
        assert mirrored.tail_plus is model.tail_minus
        for x in (1e-3, 0.5):
            assert functionals(mirrored, x).A == pytest.approx(-functionals(model, x).A, rel=1e-10)

    def test_density_cross_check(self):
        """Should match tail-only nu and V against density quadrature"""
        check = density_cross_check(power_model(gamma=0.2, alpha=0.8, c_plus=1.0, c_minus=2.0), 0.05)
        assert check["nu_rel_diff"] < 1e-6
        assert check["V_rel_diff"] < 1e-6

    def test_density_cross_check_without_densities(self):
        """Should return None when a side has no density"""
        x = np.geomspace(1e-8, 1.0, 30)
        assert density_cross_check(table_model(x**-0.5, x=x), 0.1) is None


# ============================================================
# TESTS FOR smooth_measure
# ============================================================

class TestSmoothMeasure:
    """Tests for Gaussian smoothing of the normalised measure"""

    def test_error_decreases_with_n(self, drift_model):
        """Should approach the original tail at continuity points"""
        points = np.geomspace(0.5, 4.0, 10)
        exact = drift_model.tail_plus(points)
        errors = []
        for n in (10, 100, 1000):
            smoothed = smooth_measure(drift_model, n, points)
            errors.append(np.max(np.abs(smoothed.tail_plus(points) - exact)))
        assert errors[0] > errors[1] > errors[2]

    def test_smoothed_tails_positive(self, symmetric_cauchy):
        """Should return strictly positive tails and a new label"""
        points = np.geomspace(0.5, 2.0, 5)
        smoothed = smooth_measure(symmetric_cauchy, 50, points)
        assert np.all(smoothed.tail_plus(points) > 0)
        assert np.all(smoothed.tail_minus(points) > 0)
        assert smoothed.label == "symmetric_stable_alpha1-smoothed-n50"

    def test_rejects_bad_n(self, drift_model):
        """Should require a positive integer n"""
        with pytest.raises(ValueError):
            smooth_measure(drift_model, 0, [0.5, 1.0])


# ============================================================
# TESTS FOR tail_helpers.py
# ============================================================

class TestTails:
    """Tests for the tail objects"""

    def test_power_inverse(self):
        """Should invert c x^(-alpha) in closed form"""
        tail = PowerTail(2.0, 0.5)
        assert tail.inverse([4.0])[0] == pytest.approx(0.25)

    def test_tempered_inverse_falls_back(self):
        """Should return NaN for levels reached only in the tempered part"""
        tail = PowerTail(1.0, 0.5, tempering=1.0)
        assert math.isnan(tail.inverse([0.5])[0])

    def test_step_table_left_limit(self):
        """Should be right-continuous with explicit left limits"""
        tail = TableTail([0.1, 0.2, 0.4], [8.0, 4.0, 2.0], "step")
        assert tail(0.2) == pytest.approx(4.0)
        assert tail.left_limit(0.2) == pytest.approx(8.0)

    def test_loglinear_table_is_power_between_nodes(self):
        """Should interpolate power laws exactly"""
        x = np.array([0.01, 0.1, 1.0])
        tail = TableTail(x, x**-0.5)
        assert tail(0.04) == pytest.approx(5.0, rel=1e-12)

    def test_table_rejects_bad_grid(self):
        """Should reject unsorted x"""
        with pytest.raises(ValueError):
            TableTail([0.2, 0.1], [1.0, 2.0])


# ============================================================
# TESTS FOR spec_helpers.py
# ============================================================

class TestSpecParsing:
    """Tests for process-spec and run-config parsing"""

    def test_catalog_reference(self):
        """Should load catalog specs by name"""
        spec = load_process_spec("catalog:drift_two_sided_alpha05")
        assert spec["gamma"] == 1.0

    def test_unknown_catalog_name(self):
        """Should reject unknown catalog names"""
        with pytest.raises(SpecParseError):
            load_process_spec("catalog:nope")

    def test_malformed_json(self, tmp_path):
        """Should report malformed JSON as a parse error"""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(SpecParseError, match="malformed JSON"):
            load_process_spec(str(path))

    def test_alpha_out_of_range(self):
        """Should reject alpha outside (0, 2) as not a Levy measure"""
        with pytest.raises(ModelValidationError, match="not a Lévy measure"):
            build_model({"measure": {"kind": "stable_tails", "alpha": 2.5, "c_plus": 1.0}})

    def test_unknown_keys(self):
        """Should treat unknown keys as errors"""
        with pytest.raises(SpecParseError, match="unknown keys"):
            build_model({"gamma": 0.0, "colour": "red", "measure": {"kind": "none"}})

    def test_table_spec(self):
        """Should build table tails and a zero side"""
        model = build_model(
            {
                "label": "t",
                "measure": {"kind": "table", "x": [0.01, 0.1, 1.0], "tail_plus": [10.0, 3.0, 1.0], "tail_minus": [0.0, 0.0, 0.0]},
            }
        )
        assert isinstance(model.tail_plus, TableTail)
        assert isinstance(model.tail_minus, ZeroTail)

    def test_run_config_schema_version(self):
        """Should require the supported schema_version"""
        assert check_run_config({"schema_version": 1, "n": 1000})["n"] == 1000
        with pytest.raises(SpecParseError):
            check_run_config({"schema_version": 2})
        with pytest.raises(SpecParseError):
            check_run_config({"schema_version": 1, "bogus": True})

    def test_parse_grid_and_times(self):
        """Should parse 'jmin:jmax' and comma-separated times"""
        assert parse_grid("4:40") == (4, 40)
        assert parse_t_values("1e-2,1e-3") == [1e-2, 1e-3]
        with pytest.raises(SpecParseError):
            parse_grid("40:4")
        with pytest.raises(SpecParseError):
            parse_t_values("1e-2,-1")
