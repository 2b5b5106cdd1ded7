from __future__ import annotations

import math

import numpy as np
import pytest

from robustpulse.errors import ConvergenceError, DomainError
from robustpulse.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    QuadConfig,
    gk15,
    integrate,
)


def _monomial_exact(d):
    return 0.0 if d % 2 else 2.0 / (d + 1)


@pytest.mark.parametrize("degree", range(23))
def test_kronrod_rule_is_exact_to_degree_22(degree):
    value = float(KRONROD_WEIGHTS @ NODES**degree)
    assert value == pytest.approx(_monomial_exact(degree), abs=1e-14)


@pytest.mark.parametrize("degree", range(14))
def test_gauss_rule_is_exact_to_degree_13(degree):
    value = float(GAUSS_WEIGHTS @ NODES**degree)
    assert value == pytest.approx(_monomial_exact(degree), abs=1e-14)


def test_gauss_rule_not_exact_at_degree_14():
    assert abs(float(GAUSS_WEIGHTS @ NODES**14) - 2.0 / 15) > 1e-6


def test_weights_sum_to_interval_length():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)


def test_gk15_error_estimate_vanishes_on_polynomials():
    value, err = gk15(lambda x: 3 * x**5 - x**2 + 1, 0.0, 2.0)
    assert value == pytest.approx(3 * 64 / 6 - 8 / 3 + 2, rel=1e-14)
    assert err < 1e-12


@pytest.mark.parametrize(
    "f, a, b, exact",
    [
        (np.sqrt, 0.0, 1.0, 2.0 / 3.0),
        (np.sin, 0.0, math.pi, 2.0),
        (lambda x: 1.0 / (1.0 + x * x), 0.0, 1.0, math.pi / 4),
        (lambda x: np.exp(-x * x), -6.0, 6.0, math.sqrt(math.pi) * math.erf(6.0)),
        (lambda x: np.log(x), 1e-300, 1.0, -1.0),
    ],
)
def test_integrate_known_values(f, a, b, exact):
    assert integrate(f, a, b) == pytest.approx(exact, rel=1e-11, abs=1e-11)


def test_reversed_and_empty_intervals():
    assert integrate(np.cos, 1.0, 0.0) == pytest.approx(-math.sin(1.0), rel=1e-13)
    assert integrate(np.cos, 0.5, 0.5) == 0.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_integrand_raises():
    with pytest.raises(ConvergenceError):
        integrate(lambda x: 1.0 / x, 0.0, 1.0)


def test_subdivision_budget_raises():
    cfg = QuadConfig(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=5)
    with pytest.raises(ConvergenceError):
        integrate(lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, cfg)


@pytest.mark.parametrize("kwargs", [{"abs_tol": 0.0}, {"rel_tol": -1.0}, {"max_subdivisions": 0}])
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        QuadConfig(**kwargs)


def test_config_from_env():
    assert QuadConfig.from_env({}) == QuadConfig()
    assert QuadConfig.from_env({"ROBUSTPULSE_TOL": "1e-10"}) == QuadConfig(1e-10, 1e-10)
    cfg = QuadConfig.from_env({"ROBUSTPULSE_TOL": "abs=1e-9, rel=1e-8, max=64"})
    assert cfg == QuadConfig(1e-9, 1e-8, 64)
    with pytest.raises(DomainError):
        QuadConfig.from_env({"ROBUSTPULSE_TOL": "tight"})
    with pytest.raises(DomainError):
        QuadConfig.from_env({"ROBUSTPULSE_TOL": "foo=1"})
