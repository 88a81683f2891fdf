import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aabinder.errors import EmptyBranch, NoOverlap, SingularSystem, ValidationError
from aabinder.rheology import (Behavior, Branch, FitQualityWarning, FlowCurve, LoopSign, Model,
                               ShearProtocol, aggregate_fits, classify, fit_bingham,
                               fit_herschel_bulkley, fit_modified_bingham, fit_polynomial_model,
                               golden_section, hysteresis_area, polyfit_normal, read_flow_csv,
                               solve_normal_equations, validate_protocol, write_flow_csv)

DOWN = np.arange(100.0, 0.0, -5.0)          # 100 .. 5
DOWN0 = np.arange(100.0, -1.0, -10.0)       # 100 .. 0
UP0 = DOWN0[::-1]


def down(stress, rate=DOWN):
    return FlowCurve.from_arrays(rate, stress)


def test_mb_recovers_generator():
    tau = 5.2872 + 1.1514 * DOWN - 0.001 * DOWN ** 2
    f = fit_modified_bingham(down(tau))
    assert f.tau0 == pytest.approx(5.2872, abs=1e-6)
    assert f.mu_p == pytest.approx(1.1514, abs=1e-6)
    assert f.c == pytest.approx(-0.001, abs=1e-6)
    assert f.r2 == pytest.approx(1.0, abs=1e-12)
    assert f.behavior is Behavior.SHEAR_THINNING


def test_mb_linear_and_constant():
    f = fit_modified_bingham(down(3 + 2 * DOWN))
    assert (f.tau0, f.mu_p) == pytest.approx((3, 2), abs=1e-9)
    assert f.c == pytest.approx(0, abs=1e-12)
    assert f.behavior is Behavior.BINGHAM_PLASTIC
    g = fit_modified_bingham(down(np.full_like(DOWN, 7.0)))
    assert (g.tau0, g.mu_p, g.c) == pytest.approx((7, 0, 0), abs=1e-9)
    assert g.behavior is Behavior.BINGHAM_PLASTIC and g.r2 == 1.0


def test_normal_equations_against_lstsq():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 100, 15)
    y = rng.normal(0, 1, 15) + 4 + 0.3 * x - 0.002 * x ** 2
    oracle = np.linalg.lstsq(np.vander(x, 3, increasing=True), y, rcond=None)[0]
    assert polyfit_normal(x, y, 2) == pytest.approx(oracle, rel=1e-9, abs=1e-12)


def test_solver_rank_check():
    with pytest.raises(SingularSystem):
        solve_normal_equations(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 1.0]))
    assert solve_normal_equations(np.array([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 5.0])) == \
        pytest.approx(np.linalg.solve([[2, 1], [1, 3]], [3, 5]))


def test_bingham_examples():
    f = fit_bingham(down(3 + 2 * DOWN))
    assert (f.tau0, f.mu_p, f.c, f.r2) == pytest.approx((3, 2, 0, 1), abs=1e-9)
    with pytest.raises(SingularSystem):
        fit_polynomial_model([50.0] * 6, np.arange(6.0), "bingham")


def test_bingham_noisy_recovery():
    rng = np.random.default_rng(20240101)
    tau = 10 + 1.5 * DOWN + rng.normal(0, 0.1, DOWN.size)
    f = fit_bingham(down(tau))
    assert f.tau0 == pytest.approx(10, abs=0.1)
    assert f.mu_p == pytest.approx(1.5, abs=0.1)


def test_fit_requires_down_branch_and_points():
    with pytest.raises(ValidationError):
        fit_modified_bingham(FlowCurve.from_arrays(UP0, UP0, branch="up"))
    with pytest.raises(ValidationError):
        fit_modified_bingham(down([3.0, 2.0, 1.0], rate=[30.0, 20.0, 10.0]))


def test_low_r2_warns():
    rng = np.random.default_rng(1)
    with pytest.warns(FitQualityWarning):
        fit_bingham(down(50 + rng.normal(0, 10, DOWN.size)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fit_bingham(down(3 + 2 * DOWN))


def test_hb_recovers_generator():
    f = fit_herschel_bulkley(down(4 + 0.8 * DOWN ** 0.7))
    assert (f.tau0, f.c, f.n) == pytest.approx((4, 0.8, 0.7), abs=1e-3)
    assert f.behavior is Behavior.SHEAR_THINNING and not f.negative_yield


def test_hb_power_law_zero_yield():
    f = fit_herschel_bulkley(down(2 * DOWN ** 0.5))
    assert abs(f.tau0) < 1e-3
    assert f.n == pytest.approx(0.5, abs=1e-3)


def test_hb_zero_rate_point_allowed():
    f = fit_herschel_bulkley(down(4 + 0.8 * DOWN0 ** 0.7, rate=DOWN0))
    assert f.tau0 == pytest.approx(4, abs=1e-3)
    with pytest.raises(ValidationError):
        fit_herschel_bulkley(down([5.0, 4, 3, 2], rate=[30.0, 20, 10, 0]))


def test_hb_negative_yield_flag_on_thickening_data():
    # Stronger-than-quadratic thickening: HB hits the n = 2 bound and
    # compensates with a negative intercept.
    tau = 1 + 0.5 * DOWN + 0.001 * DOWN ** 3
    mb = fit_modified_bingham(down(tau))
    assert mb.c > 0
    f = fit_herschel_bulkley(down(tau))
    assert f.negative_yield and f.tau0 < 0
    assert f.n == pytest.approx(2.0, abs=1e-3) and f.behavior is Behavior.SHEAR_THICKENING


def test_golden_section_quadratic():
    assert golden_section(lambda x: (x - 0.37) ** 2, 0.1, 2.0, 1e-6) == pytest.approx(0.37, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 150), st.floats(0.3, 3.5), st.floats(-0.005, 0.005))
def test_refit_idempotent(tau0, mu, c):
    tau = tau0 + mu * DOWN + c * DOWN ** 2
    if np.any(tau < 0):
        return
    f = fit_modified_bingham(down(tau))
    g = fit_modified_bingham(down(f.predict(DOWN)))
    assert (g.tau0, g.mu_p, g.c) == pytest.approx((f.tau0, f.mu_p, f.c), rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 50), st.floats(0.5, 100.0))
def test_shift_and_scale(shift, k):
    rng = np.random.default_rng(3)
    tau = 5 + 1.2 * DOWN - 0.002 * DOWN ** 2 + rng.normal(0, 0.5, DOWN.size)
    f = fit_modified_bingham(down(tau))
    s = fit_modified_bingham(down(tau + shift))
    assert s.tau0 == pytest.approx(f.tau0 + shift, abs=1e-8)
    assert (s.mu_p, s.c) == pytest.approx((f.mu_p, f.c), abs=1e-9)
    m = fit_modified_bingham(down(tau * k))
    assert (m.tau0, m.mu_p, m.c) == pytest.approx((k * f.tau0, k * f.mu_p, k * f.c), rel=1e-8)
    assert m.behavior is f.behavior


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_nested_r2(seed):
    rng = np.random.default_rng(seed)
    tau = rng.uniform(0, 100) + rng.uniform(0.3, 3) * DOWN + rng.uniform(-3e-3, 3e-3) * DOWN ** 2
    tau = np.abs(tau + rng.normal(0, rng.uniform(0.01, 5), DOWN.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitQualityWarning)
        assert fit_modified_bingham(down(tau)).r2 >= fit_bingham(down(tau)).r2 - 1e-12


def test_classify():
    assert classify(1.0, -1e-3) is Behavior.SHEAR_THINNING
    assert classify(1.0, 1e-3) is Behavior.SHEAR_THICKENING
    assert classify(1.0, 1e-12) is Behavior.BINGHAM_PLASTIC
    assert classify(0.0, 0.0) is Behavior.BINGHAM_PLASTIC


def test_r2_matches_residuals():
    rng = np.random.default_rng(5)
    tau = 5 + DOWN + rng.normal(0, 2, DOWN.size)
    f = fit_modified_bingham(down(tau))
    resid = tau - f.predict(DOWN)
    assert f.r2 == pytest.approx(1 - resid @ resid / np.sum((tau - tau.mean()) ** 2), abs=1e-9)


def test_aggregate_fits():
    fits = [fit_bingham(down(t0 + 2 * DOWN)) for t0 in (3.0, 4.0, 5.0)]
    s = aggregate_fits(fits)
    assert s.runs == 3
    assert s.mean["tau0"] == pytest.approx(4.0)
    assert s.std["tau0"] == pytest.approx(1.0)      # sample std of 3,4,5
    assert s.mean["mu_p"] == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        aggregate_fits([])


def test_flow_curve_invariants():
    with pytest.raises(ValidationError):
        FlowCurve.from_arrays([10.0, 20, 20], [1.0, 2, 3], branch="up")
    with pytest.raises(ValidationError):
        FlowCurve.from_arrays([30.0, 20, 10], [1.0, -2, 3])
    with pytest.raises(ValidationError):
        FlowCurve.from_arrays([30.0, 20, 10], [1.0, 2, 3], hold=0.0)


# -- protocol ---------------------------------------------------------------

def test_protocol_canonical():
    up = FlowCurve.from_arrays(UP0, 5 + UP0, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, 4 + DOWN0)
    assert validate_protocol(up, dn).ok


def test_protocol_low_ceiling():
    r = np.arange(0.0, 81.0, 10.0)
    up = FlowCurve.from_arrays(r, r, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, DOWN0)
    rep = validate_protocol(up, dn)
    assert "ramp ceiling 80 < 100" in rep.deviations


def test_protocol_short_hold():
    hold = np.full(UP0.size, 20.0)
    hold[3] = 10.0
    up = FlowCurve.from_arrays(UP0, UP0, hold=hold, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, DOWN0)
    (dev,) = validate_protocol(up, dn).deviations
    assert "step 3" in dev and "10 s" in dev


def test_protocol_empty_branch():
    dn = FlowCurve.from_arrays(DOWN0, DOWN0)
    with pytest.raises(EmptyBranch):
        validate_protocol(None, dn)
    with pytest.raises(EmptyBranch):
        validate_protocol(FlowCurve((), (), (), "up"), dn)


def test_protocol_parameters_recorded():
    p = ShearProtocol()
    assert (p.preshear_rate, p.preshear_time, p.rest_time, p.step_hold) == (100, 30, 45, 20)


# -- hysteresis -------------------------------------------------------------

def test_hysteresis_identical_zero():
    up = FlowCurve.from_arrays(UP0, 5 + UP0, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, 5 + DOWN0)
    assert hysteresis_area(up, dn).loop_area == pytest.approx(0, abs=1e-12)


def test_hysteresis_rectangle():
    up = FlowCurve.from_arrays(UP0, 7 + UP0, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, 5 + DOWN0)
    h = hysteresis_area(up, dn)
    assert h.loop_area == pytest.approx(200.0)
    assert h.sign is LoopSign.THIXOTROPIC
    assert hysteresis_area(dn, up).sign is LoopSign.RHEOPECTIC


def test_hysteresis_polynomial_against_closed_form():
    # difference d(x) = 3 + 0.2 x - 0.001 x^2 on [0, 100], closed form integral
    x = np.linspace(0, 100, 20001)
    base = 10 + 0.5 * x
    up = FlowCurve.from_arrays(x, base + 3 + 0.2 * x - 0.001 * x ** 2, branch="up")
    dn = FlowCurve.from_arrays(x[::-1], base[::-1])
    exact = 3 * 100 + 0.1 * 100 ** 2 - 0.001 * 100 ** 3 / 3
    # trapezoid error bound h^2 (b - a) max|d''| / 12 = 4.2e-7 for h = 0.005
    assert hysteresis_area(up, dn).loop_area == pytest.approx(exact, abs=1e-6)


def test_hysteresis_partial_overlap_and_none():
    up = FlowCurve.from_arrays([0.0, 50, 100], [2.0, 2, 2], branch="up")
    dn = FlowCurve.from_arrays([60.0, 40, 20], [1.0, 1, 1])
    h = hysteresis_area(up, dn)
    assert h.rate_range == (20.0, 60.0) and h.loop_area == pytest.approx(40.0)
    with pytest.raises(NoOverlap):
        hysteresis_area(FlowCurve.from_arrays([0.0, 10], [1.0, 1], branch="up"),
                        FlowCurve.from_arrays([50.0, 20], [1.0, 1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_hysteresis_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    ux = np.sort(rng.choice(np.arange(0, 101), 12, replace=False)).astype(float)
    dx = np.sort(rng.choice(np.arange(0, 101), 9, replace=False)).astype(float)[::-1]
    up = FlowCurve.from_arrays(ux, rng.uniform(0, 50, ux.size), branch="up")
    dn = FlowCurve.from_arrays(dx, rng.uniform(0, 50, dx.size))
    assert hysteresis_area(up, dn).loop_area == pytest.approx(-hysteresis_area(dn, up).loop_area,
                                                              abs=1e-9)


def test_flow_csv_round_trip(tmp_path):
    up = FlowCurve.from_arrays(UP0, 5 + UP0, branch="up")
    dn = FlowCurve.from_arrays(DOWN0, 4 + DOWN0 - 0.001 * DOWN0 ** 2)
    p = tmp_path / "run.csv"
    write_flow_csv(p, up, dn)
    assert p.read_text().splitlines()[0] == "shear_rate_per_s,shear_stress_pa,hold_time_s,branch"
    got = read_flow_csv(p)
    assert got[Branch.UP] == up and got[Branch.DOWN] == dn


def test_model_parse():
    assert Model.parse("mb") is Model.MODIFIED_BINGHAM
    assert Model.parse("hb") is Model.HERSCHEL_BULKLEY
    assert Model.parse("bingham") is Model.BINGHAM
