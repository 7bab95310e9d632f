"""Oracle and property tests for the closed-form bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amcmc.bounds import (
    BoundInputs,
    ErgodicityParams,
    clamp_tv,
    l2_bound_approx,
    l2_bound_exact,
    mixing_time_bound,
    stationary_bias_bound,
    tv_bound_approx,
    tv_bound_exact,
    variance_factor,
)


def variance_factor_bruteforce(t: int, alpha: float) -> float:
    """Independent O(t^2) oracle: the literal normalized double sum."""
    j = np.arange(t)
    return float(np.power(1.0 - alpha, np.abs(j[:, None] - j[None, :])).sum()) / (
        t * t
    )


# ---------------------------------------------------------------------------
# frozen values
# ---------------------------------------------------------------------------


def test_variance_factor_frozen_value():
    # S(2, 1/2) = (1/4) * (2 + 2 * (1/2)) = 3/4
    assert variance_factor(2, 0.5) == pytest.approx(0.75, abs=1e-15)


def test_tv_bound_exact_frozen_value():
    # alpha = 1/2, t = 2, tv0 = 1/2: (1 - 1/4) * (1/2) / (1/2 * 2) = 3/8
    got = tv_bound_exact(0.5, BoundInputs(t=2, tv0=0.5))
    assert got == pytest.approx(0.375, abs=1e-15)


def test_l2_bound_exact_frozen_values():
    # t = 2, alpha = 1/2, tv0 = 1/2, fstar = 1: 4 * 3/8 + 3/4 = 9/4... with
    # fstar = 1 the two pieces are 1.5 + 0.75
    got = l2_bound_exact(0.5, BoundInputs(t=2, tv0=0.5, fstar=1.0))
    assert got == pytest.approx(2.25, abs=1e-14)
    # t = 1 collapses to 4 tv0 + 1 per unit fstar^2
    got = l2_bound_exact(0.5, BoundInputs(t=1, tv0=0.5, fstar=1.0))
    assert got == pytest.approx(3.0, abs=1e-14)
    got = l2_bound_exact(0.5, BoundInputs(t=1, tv0=0.69, fstar=1.3))
    assert got == pytest.approx((4.0 * 0.69 + 1.0) * 1.69, abs=1e-12)


def test_mixing_time_endpoints():
    assert mixing_time_bound(0.1, 0.01) == pytest.approx(43.708, abs=0.01)
    assert mixing_time_bound(1e-4, 1e-4) == pytest.approx(92098.8, abs=0.5)


# ---------------------------------------------------------------------------
# variance factor vs the brute-force double sum
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("alpha", [1e-4, 0.01, 0.1, 0.5, 0.9])
@pytest.mark.parametrize("t", [1, 2, 7, 64, 500])
def test_variance_factor_matches_double_sum(alpha, t):
    assert variance_factor(t, alpha) == pytest.approx(
        variance_factor_bruteforce(t, alpha), abs=1e-12
    )


@given(
    alpha=st.floats(1e-5, 1.0 - 1e-9, exclude_max=True),
    t=st.integers(1, 400),
)
@settings(max_examples=80, deadline=None)
def test_variance_factor_property(alpha, t):
    got = variance_factor(t, alpha)
    assert got == pytest.approx(variance_factor_bruteforce(t, alpha), abs=1e-10)
    # S always lies in (0, 1]: it averages values (1 - alpha)^{|j-k|} <= 1
    assert 0.0 < got <= 1.0 + 1e-12


def test_variance_factor_t1_is_one():
    for alpha in (1e-8, 1e-4, 0.3, 0.999999):
        assert variance_factor(1, alpha) == 1.0


# ---------------------------------------------------------------------------
# reductions and orderings
# ---------------------------------------------------------------------------


def test_approx_bounds_reduce_bitwise_at_zero_epsilon():
    params = ErgodicityParams(0.37, 0.0)
    for t in (1, 3, 17, 998):
        inputs = BoundInputs(t=t, tv0=0.8, fstar=2.5)
        assert tv_bound_approx(params, t, 0.8) == tv_bound_exact(0.37, inputs)
        assert l2_bound_approx(params, t, 0.8, 2.5) == l2_bound_exact(0.37, inputs)


@given(
    alpha=st.floats(0.01, 0.99),
    eps_frac=st.floats(0.0, 0.999),
    t=st.integers(1, 2000),
    tv0=st.floats(0.0, 1.0),
)
@settings(max_examples=100, deadline=None)
def test_approx_tv_dominates_exact(alpha, eps_frac, t, tv0):
    """Approximating never tightens the bound at matched inputs."""
    eps = eps_frac * alpha / 2.0
    params = ErgodicityParams(alpha, eps)
    exact = tv_bound_exact(alpha, BoundInputs(t=t, tv0=tv0))
    approx = tv_bound_approx(params, t, tv0)
    assert approx >= exact - 1e-12


def test_tv_bound_nonincreasing_in_t():
    for alpha in (0.05, 0.5):
        vals = [tv_bound_exact(alpha, BoundInputs(t=t)) for t in range(1, 300)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_stationary_bias():
    assert stationary_bias_bound(ErgodicityParams(0.2, 0.05)) == pytest.approx(0.25)


def test_mixing_time_monotone_in_delta():
    ms = [mixing_time_bound(0.1, d) for d in (0.2, 0.1, 0.01, 1e-4)]
    assert all(b > a for a, b in zip(ms, ms[1:]))


# ---------------------------------------------------------------------------
# validation and clamping
# ---------------------------------------------------------------------------


def test_parameter_validation():
    with pytest.raises(ValueError):
        ErgodicityParams(0.0)
    with pytest.raises(ValueError):
        ErgodicityParams(1.0)
    with pytest.raises(ValueError):
        ErgodicityParams(0.2, 0.1)  # epsilon must stay below alpha / 2
    with pytest.raises(ValueError):
        BoundInputs(t=0)
    with pytest.raises(ValueError):
        BoundInputs(t=1, tv0=1.5)
    with pytest.raises(ValueError):
        BoundInputs(t=1, fstar=-0.1)
    with pytest.raises(ValueError):
        mixing_time_bound(0.1, 0.0)
    with pytest.raises(ValueError):
        mixing_time_bound(0.1, 1.0)


def test_alpha_eps():
    assert ErgodicityParams(0.3, 0.1).alpha_eps == pytest.approx(0.1)


def test_clamp_tv():
    assert clamp_tv(-0.5) == 0.0
    assert clamp_tv(0.5) == 0.5
    assert clamp_tv(7.0) == 1.0
