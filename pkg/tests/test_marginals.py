from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expmod.errors import DimensionError, RangeError, ResourceLimitError
from expmod.marginals import (
    MarginalDistribution,
    build_transition,
    compatibility_residual,
    correlation_from_marginal,
    evolve_tv,
    primitivity_certificate,
    stationary,
    stationary_correlations,
    substitution_leaves,
)
from expmod.words import Word
from oracles import full_enumeration_matrix

fractions = st.integers(1, 99).map(lambda i: Fraction(i, 100))


def test_order_zero_matrix():
    p = Fraction(3, 10)
    M = build_transition(0, p)
    assert M.dense().tolist() == [[1 - p, p], [p, 1 - p]]


@pytest.mark.parametrize("ell", [0, 1, 2, 3, 4])
def test_matches_full_enumeration(ell):
    p = Fraction(1, 2) if ell == 1 else Fraction(2, 7)
    M = build_transition(ell, p).dense()
    ref = full_enumeration_matrix(ell, p)
    assert all(M[b, a] == ref[b][a] for b in range(M.shape[0]) for a in range(M.shape[1]))


@settings(max_examples=25, deadline=None)
@given(fractions, st.integers(0, 5))
def test_rows_sum_to_one_exactly(p, ell):
    assert all(s == 1 for s in build_transition(ell, p).row_sums())


@settings(max_examples=25, deadline=None)
@given(st.floats(0.001, 0.999), st.integers(0, 7))
def test_rows_sum_to_one_float(p, ell):
    assert np.max(np.abs(np.asarray(build_transition(ell, p).row_sums()) - 1)) <= 1e-14


def test_leaf_counts_are_fibonacci():
    assert [len(substitution_leaves(s)) for s in range(1, 9)] == [2, 3, 5, 8, 13, 21, 34, 55]


def test_order_cap():
    with pytest.raises(ResourceLimitError):
        build_transition(13, 0.3)
    with pytest.raises(ValueError):
        build_transition(2, 1.5)


def test_stationary_order_one():
    mu = stationary(build_transition(1, Fraction(1, 10)))
    assert mu.weights[0] + mu.weights[3] - Fraction(1, 2) == 2 * Fraction(5, 24)
    assert correlation_from_marginal(mu, 1) == Fraction(5, 24)


@settings(max_examples=10, deadline=None)
@given(fractions, st.integers(1, 5))
def test_exact_stationary_is_fixed(p, ell):
    M = build_transition(ell, p)
    mu = stationary(M)
    assert sum(mu.weights) == 1
    assert list(M.left_multiply(mu.weights)) == list(mu.weights)
    # flip symmetry and fair single sites
    size = 1 << (ell + 1)
    assert all(mu.weights[i] == mu.weights[size - 1 - i] for i in range(size))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 0.99), st.integers(1, 6))
def test_float_stationary_residual(p, ell):
    M = build_transition(ell, p)
    mu = stationary(M)
    assert np.abs(M.left_multiply(mu.weights) - mu.weights).sum() <= 1e-13


@pytest.mark.parametrize("ell", [1, 3, 5])
def test_compatibility(ell):
    p = 0.37
    hi = stationary(build_transition(ell + 1, p))
    lo = stationary(build_transition(ell, p))
    assert compatibility_residual(hi, lo) <= 1e-10
    with pytest.raises(DimensionError):
        compatibility_residual(hi, hi)


def test_compatibility_exact():
    p = Fraction(1, 3)
    hi = stationary(build_transition(4, p))
    lo = stationary(build_transition(3, p))
    assert compatibility_residual(hi, lo) == 0


def test_primitivity_independent_of_p():
    assert primitivity_certificate(build_transition(4, 0.5)) == primitivity_certificate(build_transition(4, 0.01))


def test_convergence_from_point_mass():
    M = build_transition(3, 0.2)
    target = stationary(M)
    start = MarginalDistribution.point_mass(Word.ones(4))
    tv = evolve_tv(M, start, target, 80)
    assert tv[0] > 0.5 and tv[-1] < 1e-8


def test_correlation_range():
    mu = stationary(build_transition(2, 0.3))
    with pytest.raises(RangeError):
        correlation_from_marginal(mu, 3)
    assert abs(correlation_from_marginal(mu, 0) - 0.25) < 1e-14


def test_stationary_correlations_zero_distance():
    vals = stationary_correlations(3, Fraction(1, 4))
    assert vals[0] == Fraction(1, 4)
