"""Exact-distribution oracles and the normal-approximation error table."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrng_audit.oracle import (
    ENUMERATION_MAX_N,
    EnumerationLimitError,
    approximation_error,
    exact_distribution_binomial,
    exact_distribution_enumerate,
    exact_two_sided_p,
    xor_count_mean,
    xor_count_variance_lag1,
)


def test_enumerate_examples():
    assert exact_distribution_enumerate(2, 1, 0.5).as_dict() == {0: 0.5, 1: 0.5}
    assert exact_distribution_enumerate(3, 1, 0.5).as_dict() == {0: 0.25, 1: 0.5, 2: 0.25}
    degenerate = exact_distribution_enumerate(3, 1, 1.0)
    assert degenerate.pmf[0] == 1.0 and degenerate.pmf[1:].sum() == 0.0


def test_enumerate_size_limit():
    with pytest.raises(EnumerationLimitError):
        exact_distribution_enumerate(ENUMERATION_MAX_N + 1, 1, 0.5)


def test_binomial_examples():
    assert exact_distribution_binomial(3, 1).as_dict() == {0: 0.25, 1: 0.5, 2: 0.25}
    assert exact_distribution_binomial(2, 1).as_dict() == {0: 0.5, 1: 0.5}
    assert exact_distribution_binomial(8192, 1).mean() == pytest.approx(4095.5, abs=1e-9)


@pytest.mark.parametrize("n", [2, 5, 9, 14, 17])
def test_enumerate_matches_binomial_at_half(n):
    """At p=1/2 the statistic is exactly Binomial(n-lag, 1/2) for every lag."""
    for lag in range(1, n):
        enum = exact_distribution_enumerate(n, lag, 0.5)
        closed = exact_distribution_binomial(n, lag)
        assert np.max(np.abs(enum.pmf - closed.pmf)) <= 1e-12


@pytest.mark.parametrize("bias", [0.1, 0.3, 0.5, 0.73])
@pytest.mark.parametrize("n", [4, 11, 16])
def test_enumerate_moments_match_formulas(n, bias):
    dist = exact_distribution_enumerate(n, 1, bias)
    assert dist.mean() == pytest.approx(xor_count_mean(n, 1, bias), abs=1e-9)
    assert dist.variance() == pytest.approx(xor_count_variance_lag1(n, bias), abs=1e-9)


@given(st.integers(3, 12), st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_enumerate_mean_any_lag(n, bias):
    """The mean q(n-lag) is exact for every lag even under XOR dependence."""
    for lag in (1, n - 1):
        dist = exact_distribution_enumerate(n, lag, bias)
        assert dist.mean() == pytest.approx(xor_count_mean(n, lag, bias), abs=1e-9)


def test_variance_formula_collapses_at_half():
    n = 1000
    q = 0.5
    assert xor_count_variance_lag1(n, 0.5) == pytest.approx((n - 1) * q * (1 - q))


def test_pmf_is_normalized():
    for dist in (
        exact_distribution_enumerate(12, 2, 0.27),
        exact_distribution_binomial(100_000, 1),
    ):
        assert abs(math.fsum(dist.pmf.tolist()) - 1.0) <= 1e-12
        assert np.all(dist.pmf >= 0.0)


def test_two_sided_p_examples():
    dist = exact_distribution_enumerate(3, 1, 0.5)
    assert exact_two_sided_p(dist, 1) == 1.0
    assert exact_two_sided_p(dist, 0) == 0.5
    assert exact_two_sided_p(dist, 2) == 0.5


def test_two_sided_p_extreme_point_is_tail_mass():
    dist = exact_distribution_binomial(11, 1)
    # Both extreme cells, each 2^-10
    assert exact_two_sided_p(dist, 0) == pytest.approx(2.0 / 1024.0)


def test_two_sided_p_rejects_out_of_range():
    dist = exact_distribution_binomial(3, 1)
    for observed in (-1, 3):
        with pytest.raises(ValueError):
            exact_two_sided_p(dist, observed)


def test_approximation_error_center_is_exact():
    table = approximation_error(3, 1, 0.5)
    by_k = {row.statistic: row for row in table.rows}
    assert by_k[1].exact_p == 1.0
    assert by_k[1].approx_p == 1.0
    assert by_k[1].difference == 0.0


def test_approximation_error_consistent_with_single_queries():
    dist = exact_distribution_enumerate(14, 1, 0.3)
    table = approximation_error(14, 1, 0.3)
    for row in table.rows:
        assert row.exact_p == pytest.approx(exact_two_sided_p(dist, row.statistic), abs=1e-12)


def test_approximation_error_large_n_critical_region():
    table = approximation_error(8192, 1, 0.5)
    region = [r for r in table.rows if 0.005 <= r.approx_p <= 0.05]
    assert region, "critical region not covered"
    assert max(abs(r.difference) for r in region) <= 0.002


def test_approximation_error_biased_small_n_nonzero():
    """At p != 1/2 the plug-in variance is off; the gap must show up."""
    table = approximation_error(20, 1, 0.3)
    assert table.max_abs_difference > 0.0


def test_approximation_error_needs_an_oracle():
    with pytest.raises(EnumerationLimitError):
        approximation_error(30, 1, 0.3)


def test_approximation_error_k_range():
    table = approximation_error(10, 1, 0.5, k_range=(2, 4))
    assert [r.statistic for r in table.rows] == [2, 3, 4]
    with pytest.raises(ValueError):
        approximation_error(10, 1, 0.5, k_range=(0, 99))


def test_run_test_p_value_tracks_exact_binomial():
    """On a fair seeded stream the reported p-value matches the oracle
    module's normal-approximation route exactly and stays near the exact
    two-sided binomial value."""
    from qrng_audit.autocorr import TestParams, run_test
    from qrng_audit.simulate import ideal_source

    seq = ideal_source(0.5, 8192, seed=424242)
    fixed = run_test(seq, TestParams(lag=1, alpha=0.01, fixed_bias=0.5))
    k = fixed.statistic
    oracle_route = approximation_error(8192, 1, 0.5, k_range=(k, k)).rows[0]
    assert fixed.p_value == oracle_route.approx_p

    # estimated-bias mode lands near the exact law too; the gap left is
    # boundary-cell discreteness (inclusive two-sided convention) plus the
    # plug-in bias estimate
    estimated = run_test(seq, TestParams(lag=1, alpha=0.01))
    exact = exact_two_sided_p(exact_distribution_binomial(8192, 1), k)
    assert estimated.p_value == pytest.approx(exact, abs=0.03)
