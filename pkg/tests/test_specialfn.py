import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ltlab.errors import DomainError
from ltlab.specialfn import (Dimension, as_dim, gamma_fn, log_gamma, scalar_pow_gaps,
                             structural_constants, unit_ball_volume, vec_gap, x1, x1_derivative,
                             x1_from_depth, x2, x2_from_depth)
from oracle_values import CONSTANTS

unit = st.floats(min_value=1e-300, max_value=1.0)


def mp_x1(t):
    return 1 / (1 - mp.log(mp.mpf(t)))


@pytest.mark.parametrize("t", [0.5, 1e-10, 0.999999, 1e-300, 1.0])
def test_x1_matches_mpmath(t):
    assert x1(t) == pytest.approx(float(mp_x1(t)), rel=1e-15)
    assert x2(t) == pytest.approx(float(mp_x1(mp_x1(t))), rel=1e-14)


def test_weights_at_endpoints():
    assert x1(0.0) == 0.0
    assert x1(1.0) == 1.0
    assert x2(0.0) == 0.0
    assert x2(1.0) == 1.0


def test_weights_vectorize():
    t = np.array([0.0, 0.25, 1.0])
    assert x1(t).shape == (3,)
    assert isinstance(x1(0.25), float)


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan"), float("inf")])
def test_weights_reject_outside_unit_interval(bad):
    with pytest.raises(DomainError):
        x1(bad)
    with pytest.raises(DomainError):
        x2(bad)


def test_x1_derivative_rejects_zero():
    with pytest.raises(DomainError):
        x1_derivative(0.0)


@given(unit)
def test_log_x1_identity(t):
    # -log X1 = (1 - X2) / X2
    lhs = -math.log(x1(t)) if x1(t) > 0 else math.inf
    rhs = (1.0 - x2(t)) / x2(t)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


@given(st.floats(min_value=1e-12, max_value=1.0))
def test_x1_derivative_formula(t):
    assert x1_derivative(t) == pytest.approx(x1(t) ** 2 / t, rel=1e-14)


@given(st.floats(min_value=1e-8, max_value=0.999))
def test_log_x1_derivative_finite_difference(t):
    # relative error: near t = 0 the derivative X1/t is large
    h = 1e-3 * t
    f = lambda s: math.log(x1(s))
    fd = (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)
    assert fd == pytest.approx(x1(t) / t, rel=1e-10)


@given(st.floats(min_value=0.0, max_value=1e12))
def test_depth_forms_agree(tau):
    r = math.exp(-tau)
    if r > 0:
        assert x1_from_depth(tau) == pytest.approx(x1(r), rel=1e-13)
        assert x2_from_depth(tau) == pytest.approx(x2(r), rel=1e-13)


@given(st.floats(min_value=1e-6, max_value=1.0), st.floats(min_value=1e-6, max_value=1.0))
def test_weights_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert x1(lo) <= x1(hi)
    assert x2(lo) <= x2(hi)
    assert x1(lo) <= x2(lo)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_structural_constants(n):
    lam, kappa, omega, thr = CONSTANTS[n]
    c = structural_constants(n)
    assert c.lambda_n == lam
    assert c.kappa_n == pytest.approx(kappa, rel=1e-15)
    assert c.omega_n == pytest.approx(omega, rel=1e-15)
    assert c.moser_threshold == pytest.approx(thr, rel=1e-14)
    assert unit_ball_volume(n) == pytest.approx(omega, rel=1e-15)


def test_threshold_two_dims_is_four_pi():
    assert abs(structural_constants(2).moser_threshold - 4 * math.pi) < 1e-12


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_dimension_validation(bad):
    with pytest.raises(DomainError):
        as_dim(bad)


def test_dimension_type():
    d = Dimension(3)
    assert as_dim(d) == 3 and d.supports_nonradial
    assert not Dimension(4).supports_nonradial


@given(st.floats(min_value=0.01, max_value=170.0))
def test_gamma_matches_mpmath(x):
    assert gamma_fn(x) == pytest.approx(float(mp.gamma(x)), rel=1e-13)
    assert log_gamma(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-13, abs=1e-14)


def test_gamma_array_and_domain():
    assert np.allclose(gamma_fn(np.array([1.0, 5.0])), [1.0, 24.0])
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.0)


vecs = st.lists(st.floats(min_value=-10, max_value=10), min_size=3, max_size=3)


@given(vecs, vecs, st.integers(min_value=2, max_value=6), st.sampled_from(["improved", "classic"]))
def test_vec_gap_nonnegative(a, b, n_exp, variant):
    gap = vec_gap(np.array(a), np.array(b), n_exp, variant)
    scale = 1.0 + max(np.linalg.norm(a), np.linalg.norm(b)) ** n_exp
    assert gap >= -1e-12 * scale


def test_vec_gap_zero_at_equal_vectors_classic_n2():
    # n = 2, lambda_2 = 1: |b-a|^2 - |a|^2 - |b|^2 + 2 a.b = 0 identically
    a, b = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
    assert vec_gap(a, b, 2, "classic") == pytest.approx(0.0, abs=1e-12)


def test_vec_gap_validation():
    with pytest.raises(DomainError):
        vec_gap([1.0], [1.0], 1)
    with pytest.raises(DomainError):
        vec_gap([1.0], [1.0, 2.0], 2)
    with pytest.raises(DomainError):
        vec_gap([1.0], [1.0], 2, "other")


@given(st.floats(min_value=0, max_value=50), st.floats(min_value=0, max_value=50),
       st.floats(min_value=1, max_value=30))
def test_scalar_pow_gaps_nonnegative(k, l, q):
    sup, sub = scalar_pow_gaps(k, l, q)
    scale = 1.0 + (k + l) ** q
    assert sup[0] >= -1e-12 * scale
    assert sub[0] >= -1e-12 * scale


def test_scalar_pow_gaps_domain():
    with pytest.raises(DomainError):
        scalar_pow_gaps(1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        scalar_pow_gaps(-1.0, 1.0, 2.0)
