from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustpulse.elliptic import (
    Family,
    KernelKind,
    QuadKernel,
    eval_A,
    eval_B,
    eval_F,
    eval_I,
    eval_Im_Jm,
    eval_J,
)
from robustpulse.errors import DomainError
from robustpulse.extremal import k_lim

from conftest import GAMMA_QUARTER, GAMMA_THREE_QUARTERS, I1_K_LIM, ORACLE

SQRT_PI = math.sqrt(math.pi)
I0_CLOSED = 0.5 * SQRT_PI * GAMMA_QUARTER / GAMMA_THREE_QUARTERS
J0_CLOSED = 2.0 * SQRT_PI * GAMMA_THREE_QUARTERS / GAMMA_QUARTER


def _composite_gauss(f, a, b, panels=400, order=20):
    """Brute-force composite Gauss-Legendre, the oracle for bounded integrands."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += 0.5 * (hi - lo) * np.dot(w, f(0.5 * (hi - lo) * x + 0.5 * (hi + lo)))
    return total


def _direct_A(k):
    # defining integral over (-asin k, 0) with x = -asin k + t^2
    x0 = -math.asin(k)
    return _composite_gauss(lambda t: 2 * t / np.sqrt(k + np.sin(x0 + t * t)), 0.0, math.sqrt(-x0))


def _direct_B(k):
    x0 = -math.asin(k)
    return _composite_gauss(
        lambda t: 2 * t * np.sin(x0 + t * t) / np.sqrt(k + np.sin(x0 + t * t)), 0.0, math.sqrt(-x0)
    )


def test_gamma_table_matches_math_gamma():
    assert GAMMA_QUARTER == pytest.approx(math.gamma(0.25), rel=1e-15)
    assert GAMMA_THREE_QUARTERS == pytest.approx(math.gamma(0.75), rel=1e-15)


def test_I0_J0_gamma_closed_forms():
    assert eval_I(0.0) == pytest.approx(I0_CLOSED, abs=1e-9)
    assert eval_J(0.0) == pytest.approx(J0_CLOSED, abs=1e-9)
    assert eval_I(0.0) == pytest.approx(2.6220575543, abs=1e-10)
    assert eval_J(0.0) == pytest.approx(1.1981402347, abs=1e-10)


def test_I0_times_J0_is_pi():
    assert abs(eval_I(0.0) * eval_J(0.0) - math.pi) < 1e-10


@pytest.mark.parametrize("kind, k", [key for key in ORACLE])
def test_kernels_match_frozen_oracle(kind, k):
    fn = {"I": eval_I, "J": eval_J, "A": eval_A, "B": eval_B}[kind]
    assert fn(k) == pytest.approx(ORACLE[(kind, k)], abs=1e-12)


@pytest.mark.parametrize("k", [0.0, 0.5, 3.0])
def test_I_J_match_composite_gauss(k):
    # x = t^2 removes the endpoint singularity for the oracle as well
    upper = math.sqrt(0.5 * math.pi)
    i_ref = _composite_gauss(lambda t: 2 * t / np.sqrt(k + np.sin(t * t)), 0.0, upper)
    j_ref = _composite_gauss(lambda t: 2 * t * np.sin(t * t) / np.sqrt(k + np.sin(t * t)), 0.0, upper)
    assert eval_I(k) == pytest.approx(i_ref, abs=1e-12)
    assert eval_J(k) == pytest.approx(j_ref, abs=1e-12)


@pytest.mark.parametrize("k", [0.3, 0.5, 0.9])
def test_substituted_A_B_agree_with_defining_integrals(k):
    assert eval_A(k) == pytest.approx(_direct_A(k), abs=1e-9)
    assert eval_B(k) == pytest.approx(_direct_B(k), abs=1e-9)


def test_A_B_signs_and_zero():
    assert eval_A(0.0) == 0.0 and eval_B(0.0) == 0.0
    assert eval_A(0.5) > 0
    assert eval_B(0.5) < 0


def test_large_k_bounds():
    assert eval_I(100.0) < math.pi / 20
    assert eval_J(2.0) >= 1 / math.sqrt(3)


def test_near_unit_k_stays_finite():
    for k in (0.99, 0.999, 0.999999):
        assert math.isfinite(eval_A(k)) and math.isfinite(eval_B(k))


@pytest.mark.parametrize("bad", [-1e-12, -1.0, math.inf, math.nan])
def test_I_J_domain(bad):
    with pytest.raises(DomainError):
        eval_I(bad)
    with pytest.raises(DomainError):
        eval_J(bad)


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5])
def test_A_B_domain(bad):
    with pytest.raises(DomainError):
        eval_A(bad)
    with pytest.raises(DomainError):
        eval_B(bad)
    with pytest.raises(DomainError):
        eval_Im_Jm(bad, 1)


def test_Im_Jm_composition():
    i0, j0 = eval_I(0.0), eval_J(0.0)
    assert eval_Im_Jm(0.0, 1) == pytest.approx((i0, j0), abs=1e-14)
    assert eval_Im_Jm(0.0, 2) == pytest.approx((3 * i0, 3 * j0), abs=1e-13)
    assert eval_Im_Jm(0.0, 1, Family.plus) == pytest.approx((3 * i0, 3 * j0), abs=1e-13)
    k = 0.4
    a, b, i, j = eval_A(k), eval_B(k), eval_I(k), eval_J(k)
    assert eval_Im_Jm(k, 3, "plus") == pytest.approx((6 * a + 7 * i, 6 * b + 7 * j), abs=1e-13)
    with pytest.raises(DomainError):
        eval_Im_Jm(0.3, 0)


def test_I1_at_k_lim():
    i1, j1 = eval_Im_Jm(k_lim(), 1)
    assert i1 == pytest.approx(I1_K_LIM, abs=1e-10)
    assert abs(j1) < 1e-12
    # claimed digits agree to about 1.5e-9
    assert i1 == pytest.approx(4.45256301339, abs=1e-5)


def test_quadkernel_dispatch_and_validation():
    assert QuadKernel("I", 0.5).evaluate() == eval_I(0.5)
    assert QuadKernel(KernelKind.Jpm, 0.2, 2).evaluate() == eval_Im_Jm(0.2, 2, "plus")[1]
    assert QuadKernel("Im", 0.2, 1).evaluate() == eval_Im_Jm(0.2, 1)[0]
    with pytest.raises(DomainError):
        QuadKernel("Im", 0.2)
    with pytest.raises(DomainError):
        QuadKernel("A", 0.2, 1)
    with pytest.raises(DomainError):
        QuadKernel("I", 0.2, 3)
    with pytest.raises(DomainError):
        QuadKernel("B", 1.0)
    with pytest.raises(ValueError):
        QuadKernel("K", 0.2)


# properties --------------------------------------------------------------

GRID = np.linspace(0.0, 0.98, 50)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_Im_increasing_Jm_decreasing(m):
    vals = np.array([eval_Im_Jm(k, m) for k in GRID])
    assert np.all(np.diff(vals[:, 0]) > 0)
    assert np.all(np.diff(vals[:, 1]) < 0)


def test_I_J_decreasing_and_ratio_decreasing():
    ks = np.concatenate([np.linspace(0, 2, 21), [5, 10, 100, 1e3, 1e4]])
    i = np.array([eval_I(k) for k in ks])
    j = np.array([eval_J(k) for k in ks])
    g = i**3 / j
    assert np.all(np.diff(i) < 0) and np.all(np.diff(j) < 0) and np.all(np.diff(g) < 0)
    assert g[0] / 2 == pytest.approx(7.5229645031, abs=1e-9)
    assert g[-2] < 1e-2 and g[-1] < 1e-3


def test_F_at_zero_and_positive():
    assert eval_F(0.0) == pytest.approx(4.0, abs=1e-8)
    assert all(eval_F(k) > 0 for k in np.linspace(0.01, 0.98, 25))


@pytest.mark.parametrize("k", [0.1, 0.5, 1.0, 3.0])
def test_derivative_identity(k):
    h = 1e-5
    di = (eval_I(k + h) - eval_I(k - h)) / (2 * h)
    dj = (eval_J(k + h) - eval_J(k - h)) / (2 * h)
    assert abs(eval_I(k) + 2 * dj + 2 * k * di) < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=1e-3, max_value=10.0))
def test_I_J_monotone_in_k_hypothesis(k, dk):
    assert eval_I(k + dk) < eval_I(k)
    assert eval_J(k + dk) < eval_J(k)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=60.0))
def test_I_J_elementary_bounds_hypothesis(k):
    # sin x in [0, 1] gives (pi/2)/sqrt(k+1) <= I <= (pi/2)/sqrt(k) and J <= I
    i, j = eval_I(k), eval_J(k)
    assert i >= 0.5 * math.pi / math.sqrt(k + 1) - 1e-12
    if k > 0:
        assert i <= 0.5 * math.pi / math.sqrt(k) + 1e-12
    assert 0 < j < i
