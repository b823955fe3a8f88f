import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expmod.correlation import (
    S_closed,
    S_recursive,
    S_sequence,
    WeightKernel,
    contraction_bound,
    correlation_series,
    decay_contraction_report,
    decay_horizon,
    nu,
    nu_row,
    nu_total,
    seed_correlation,
    weight_sum,
    weight_sum_printed,
    weight_W,
)
from expmod.errors import RangeError, ResourceLimitError
from expmod.marginals import build_transition, correlation_from_marginal, stationary
from oracles import nu_by_enumeration, recurrence_by_definition

fractions = st.integers(1, 99).map(lambda i: Fraction(i, 100))


def test_nu_examples():
    assert nu(0.5, 2, 3) == 0.5
    assert nu(Fraction(1, 3), 1, 1) == 1
    assert nu(0.3, 5, 3) == 0.0


@settings(max_examples=30, deadline=None)
@given(fractions, st.integers(1, 9), st.integers(1, 17))
def test_nu_against_enumeration(p, k, n):
    assert nu(p, k, n) == nu_by_enumeration(p, k, n)


def test_nu_row_matches_scalar():
    row = nu_row(0.27, 40)
    ks = np.arange(1, 41)
    ref = np.array([nu(0.27, int(k), 40) for k in ks])
    np.testing.assert_allclose(row, ref, rtol=1e-12, atol=1e-300)


def test_S_examples():
    assert S_recursive(0.5, 3) == pytest.approx(0.75)
    assert S_closed(Fraction(1, 2), 3) == Fraction(3, 4)


@settings(max_examples=30, deadline=None)
@given(fractions, st.integers(0, 60))
def test_S_closed_equals_recursive(p, n):
    assert S_closed(p, n) == S_recursive(p, n)


@settings(max_examples=20, deadline=None)
@given(fractions, st.integers(1, 50))
def test_nu_sums_to_S(p, n):
    assert sum(nu(p, k, n) for k in range(1, n + 1)) == S_closed(p, n)


@settings(max_examples=20, deadline=None)
@given(fractions, st.integers(2, 40))
def test_weight_sum_closed_form(p, n):
    direct = sum(weight_W(p, k, n) for k in range(n // 2, n + 1))
    assert direct == weight_sum(p, n)


def test_weight_sum_printed_differs():
    p = Fraction(1, 10)
    assert float(weight_sum_printed(p, 4)) == pytest.approx(0.5845695, abs=1e-7)
    assert float(weight_sum(p, 4)) == pytest.approx(0.63982, abs=1e-5)


def test_seed_values():
    assert seed_correlation(Fraction(1, 10)) == Fraction(5, 24)
    assert seed_correlation(Fraction(1, 2)) == Fraction(1, 8)


@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(5, 7)])
def test_rational_matches_definition(p):
    s = correlation_series(p, 20, mode="rational")
    ref = recurrence_by_definition(p, 20, seed_correlation(p))
    assert [s[n] for n in range(21)] == ref


@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(3, 10)])
def test_rational_matches_marginal_chain(p):
    s = correlation_series(p, 8, mode="rational")
    mu = stationary(build_transition(8, p))
    assert all(s[n] == correlation_from_marginal(mu, n) for n in range(9))


def test_known_values():
    s = correlation_series("1/10", 3, mode="rational")
    assert s[1] == Fraction(5, 24) and s[2] == Fraction(25, 192)
    f = correlation_series(0.1, 3, precision=53)
    assert f[2] == pytest.approx(0.13020833333333333, rel=1e-15)


@settings(max_examples=8, deadline=None)
@given(fractions)
def test_float_agrees_with_rational(p):
    exact = correlation_series(p, 60, mode="rational")
    for prec in (53, 128):
        approx = correlation_series(p, 60, precision=prec)
        for n in range(1, 61):
            assert abs(float(approx[n]) - float(exact[n])) <= 1e-12 * abs(float(exact[n])) + 1e-300


def test_high_precision_type():
    s = correlation_series(0.2, 50, precision=256)
    assert isinstance(s[10], type(gmpy2.mpfr(1))) and s.precision == 256 and s.shadow_precision == 512


def test_p_zero_limit_quarter():
    # C is 1/4 at every distance when nothing ever flips
    assert seed_correlation(Fraction(0)) == Fraction(1, 4)


def test_rational_cap():
    with pytest.raises(ResourceLimitError):
        correlation_series(Fraction(1, 3), 65, mode="rational")
    with pytest.raises(RangeError):
        correlation_series(0.3, 1)


def test_kernel_total():
    k = WeightKernel(Fraction(1, 10))
    assert k.total() == k.f + k.g + k.h


@pytest.mark.parametrize("p", [0.1, 0.3, 0.45, 0.6, 0.8])
def test_contraction_report_clean(p):
    s = correlation_series(p, 3000, precision=53, verify=False)
    assert decay_contraction_report(s).ok


def test_contraction_regimes():
    assert contraction_bound(0.2, 10)[0] == 1
    assert contraction_bound(0.4, 10)[0] == 2
    assert contraction_bound(0.7, 10)[0] == 3
    _, alpha, bound = contraction_bound(0.2, 10)
    assert alpha == pytest.approx(0.6) and bound > alpha


def test_decay_horizon_settles():
    n, s = decay_horizon(0.3, n_cap=2000)
    logs = s.abs_log()
    assert n is not None and np.all(logs[n:] < math.log(1e-3)) and logs[n - 1] >= math.log(1e-3)


@settings(max_examples=20, deadline=None)
@given(fractions, st.integers(1, 60))
def test_nu_total_matches_entrywise_sum(p, n):
    assert nu_total(p, n) == sum(nu(p, k, n) for k in range(1, n + 1))
    assert nu_total(float(p), n) == pytest.approx(float(S_closed(p, n)), rel=1e-12)


def test_S_sequence_prefix():
    seq = S_sequence(Fraction(1, 3), 30)
    assert seq[0] == 0 and seq[1] == 1 and all(seq[n] == S_closed(Fraction(1, 3), n) for n in range(31))
