import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expmod.correlation import S_closed, correlation_series, nu
from expmod.errors import InfeasibleError, RangeError, SignError, SingularityError
from expmod.scaling import (
    alpha_lowp,
    b_line,
    beta,
    concentration_tail,
    d_width,
    find_x0,
    fit_power_law,
    iterated_window_sandwich,
    p_star_estimate,
    positive_upto,
    power_spectrum,
    qr_constants,
    rate_I,
    rate_I_second_derivative,
    robbins_bounds,
    series_constant,
    spectral_exponent,
    window_bounds,
    window_sign_scan,
)
from oracles import synthetic_power_law

probs = st.floats(0.01, 0.99).filter(lambda p: abs(p - 0.5) > 1e-3 and abs(p - 2 / 3) > 1e-3)


def test_beta_limits():
    assert beta(1e-9).value == pytest.approx(0, abs=1e-6)
    assert beta(0.5 - 1e-9).value > 20
    assert beta(0.1).value == pytest.approx(0.520943, abs=1e-6)
    assert spectral_exponent(0.1) == pytest.approx(1 - 0.520943, abs=1e-6)


@pytest.mark.parametrize("p", ["1/2", "2/3", 0.5])
def test_beta_singular(p):
    with pytest.raises(SingularityError):
        beta(p)


def test_beta_flags():
    assert beta(0.58).flag == "singular-adjacent" and not beta(0.58).valid
    assert beta(0.8).valid


def test_fit_exact_power_law():
    n, c = synthetic_power_law(3.0, 1.5, 2000)
    rep = fit_power_law((n, c), (10, 2000))
    assert rep.fit_slope == pytest.approx(-1.5, abs=1e-12)
    assert rep.residual < 1e-12


def test_fit_sign_error():
    n = np.arange(1, 50)
    with pytest.raises(SignError):
        fit_power_law((n, np.cos(n)), (1, 49))


def test_fit_p03():
    s = correlation_series(0.3, 10_000, precision=53)
    rep = fit_power_law(s, (100, 10_000))
    assert abs(rep.fit_slope + beta(0.3).value) / beta(0.3).value <= 0.10


def test_rate_function_values():
    assert rate_I(0.3, 0.7) == pytest.approx(0, abs=1e-15)
    assert rate_I(0.5, 1.0) == pytest.approx(0.5 * math.log(2), rel=1e-12)
    assert rate_I(0.3, 0.1) > 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.02, 0.975))
def test_rate_convex_with_min_at_one_minus_p(p):
    q = np.linspace(0.001, 0.999, 999)
    vals = rate_I(p, q)
    assert np.all(np.diff(vals, 2) > 0)
    assert abs(q[np.argmin(vals)] - (1 - p)) <= q[1] - q[0]
    assert np.all(vals >= -1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(3, 40), st.data())
def test_robbins_sandwich(p, n, data):
    k = data.draw(st.integers((n + 1) // 2, n))
    lo, hi = robbins_bounds(p, k, n)
    v = nu(p, k + 1, n + 1)
    assert lo * (1 - 1e-12) <= v <= hi * (1 + 1e-12)


def test_rate_second_derivative_matches_finite_differences():
    q = np.linspace(0.05, 0.95, 19)
    h = 1e-4
    for p in (0.1, 0.5, 0.98):
        fd = (rate_I(p, q + h) - 2 * rate_I(p, q) + rate_I(p, q - h)) / h**2
        np.testing.assert_allclose(rate_I_second_derivative(p, q), fd, rtol=1e-5, atol=1e-6)


def test_rate_not_convex_close_to_one():
    # convexity breaks down near q = 1/2 once p exceeds about 0.9787
    assert rate_I_second_derivative(0.98, 0.5) < 0
    assert rate_I_second_derivative(0.978, np.linspace(0.01, 0.99, 99)).min() > 0


def test_robbins_range():
    with pytest.raises(RangeError):
        robbins_bounds(0.3, 2, 10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(50, 1e7))
def test_window_contains_centre(p, x):
    bp = 2.0
    if d_width(x, p, bp) < 2 - p:
        lo, hi = window_bounds(x, p, bp)
        assert lo < x / (2 - p) < hi


def test_d_width_decreasing():
    assert d_width(1e6, 0.3, 2.0) < d_width(1e4, 0.3, 2.0)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.7])
def test_concentration_tail(p):
    r = concentration_tail(p, 10_000, 2.0, 1.0)
    assert r.delta <= r.bound
    assert r.tail_mass + r.window_mass == pytest.approx(S_closed(p, 10_000), rel=1e-10)


@pytest.mark.parametrize("p,expected", [(0.3, "all-positive"), (0.8, "all-positive"), (0.1, "all-positive")])
def test_window_signs_positive(p, expected):
    assert window_sign_scan(p, 500).verdict == expected


def test_window_signs_negative_region():
    # the negative sign only settles for larger n inside (1/2, 2/3)
    assert window_sign_scan(0.58, 500).negative > 0
    assert window_sign_scan(0.58, 5000).verdict == "all-negative"
    assert window_sign_scan(0.6, 2000).verdict == "all-negative"


def test_fixed_points():
    qr = qr_constants(1e8, 0.3)
    assert max(qr.residual_Q, qr.residual_R) <= 1e-12
    assert qr.Q < 1 < qr.R
    assert 1 - qr.Q <= 0.01 and qr.R - 1 <= 0.01
    far = qr_constants(1e14, 0.3)
    assert far.Q > qr.Q and far.R < qr.R


def test_fixed_point_infeasible():
    with pytest.raises(InfeasibleError):
        qr_constants(3.0, 0.3)


def test_series_constant_converges():
    lam = 1.7
    direct = sum(math.sqrt((m + 1) * lam**-m) for m in range(4000))
    assert series_constant(0.3) == pytest.approx(direct, rel=1e-13)


def test_iterated_sandwich():
    x0 = find_x0(0.3)
    assert x0 is not None
    for x in (x0, 10 * x0, 1e8):
        assert iterated_window_sandwich(x, 0.3).ok


def test_lowp_constants():
    assert alpha_lowp(0.1, 25) == pytest.approx(1.0999111, abs=1e-6)
    assert b_line(0.1) == pytest.approx(1.164883, abs=1e-6)
    grid_p = [0.02, 0.05, 0.08, 0.1]
    grid_n = [12, 20, 25, 37]
    vals = np.array([[alpha_lowp(p, n) for n in grid_n] for p in grid_p])
    assert np.all(np.diff(vals, axis=0) < 0) and np.all(np.diff(vals, axis=1) > 0)


def test_positivity_predicate():
    assert positive_upto(0.1, 500)
    assert not positive_upto(0.45, 500)


def test_p_star():
    est = p_star_estimate(500)
    assert 0.25 <= est.value <= 0.31
    assert est.bracket[0] <= est.value <= est.bracket[1]


def test_spectrum_synthetic():
    lags = np.arange(1, 20_001, dtype=float)
    rep = power_spectrum(np.r_[1.0, lags**-0.5])
    assert rep.exponent == pytest.approx(0.5, rel=0.15)


def test_spectrum_flat():
    rep = power_spectrum(np.full(1024, 0.3))
    assert np.argmax(rep.power) == 0
    assert rep.power[0] > 100 * rep.power[5:].max()


def test_spectrum_p01():
    s = correlation_series(0.1, 10_000, precision=53)
    rep = power_spectrum(s)
    assert rep.exponent == pytest.approx(1 - beta(0.1).value, rel=0.20)


def test_spectrum_too_short():
    with pytest.raises(RangeError):
        power_spectrum(np.ones(10))
