from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

import robustpulse.continuation as cont
from robustpulse.continuation import (
    SNAP_TOL,
    normalize_angle,
    reflect,
    solve,
    solve_general,
    sweep,
)
from robustpulse.dynamics import (
    conserved_residual,
    cost_of,
    integrate_extremal,
    relation_residual,
    verify_symmetry,
)
from robustpulse.errors import DomainError, NoConvergenceError
from robustpulse.extremal import ProblemSpec, bounds, simplest_extremal

from conftest import HALF_PI


@pytest.mark.parametrize("theta, expected", [
    (1.0, (1.0, 1)),
    (-1.0, (1.0, -1)),
    (2 * math.pi + 0.5, (0.5, 1)),
    (4.0, (2 * math.pi - 4.0, -1)),
    (math.pi + 5e-10, (math.pi, 1)),
    (2 * math.pi, (0.0, 1)),
])
def test_normalize_angle(theta, expected):
    n = normalize_angle(theta)
    assert (n.theta, n.sign) == pytest.approx(expected, abs=1e-12)
    assert n.original == theta


@pytest.mark.parametrize("gamma", [3.0, 20.0])
def test_shooting_matches_closed_form(gamma):
    spec = ProblemSpec(HALF_PI, 1.0, gamma)
    shot = solve_general(spec)
    exact = simplest_extremal(spec)
    assert shot.c == pytest.approx(exact.c, abs=1e-9)
    assert shot.S_x_final == pytest.approx(exact.S_x_final, abs=1e-9)
    assert shot.cost == pytest.approx(exact.cost, abs=1e-9)
    assert shot.regime == exact.regime


def test_general_target_is_a_verified_extremal():
    spec = ProblemSpec(1.0, 1.0, 5.0)
    p = solve_general(spec)
    traj = integrate_extremal(p)
    assert max(abs(v) for v in traj.endpoint_residuals) < 1e-8
    assert max(verify_symmetry(traj)) < 1e-6
    assert relation_residual(traj) < 1e-6
    assert conserved_residual(traj, p) < 1e-6
    assert cost_of(traj, 5.0) == pytest.approx(p.cost, abs=1e-6)
    lo, hi = bounds(spec)
    assert lo <= p.cost <= hi


def test_negative_target_is_mirror_image():
    plus = solve_general(ProblemSpec(1.0, 1.0, 5.0))
    minus = solve_general(ProblemSpec(-1.0, 1.0, 5.0))
    assert minus.cost == pytest.approx(plus.cost, abs=1e-10)
    assert minus.c == pytest.approx(-plus.c, abs=1e-10)
    assert minus.S_x_final == pytest.approx(-plus.S_x_final, abs=1e-10)
    assert minus.S_z_final == pytest.approx(plus.S_z_final, abs=1e-10)
    assert "reflected" in minus.flags


def test_reflect_is_an_involution_on_values():
    p = simplest_extremal(4.0)
    back = reflect(reflect(p))
    assert (back.c, back.S_x_final, back.a_x, back.theta_des) == (p.c, p.S_x_final, p.a_x, p.theta_des)


@pytest.mark.parametrize("theta", [math.pi, 3 * math.pi, math.pi + 1e-10])
def test_theta_pi_is_constant_control(theta):
    p = solve(ProblemSpec(theta, 1.0, 50.0))
    assert "constant_zero_sensitivity" in p.flags
    assert p.c == pytest.approx(math.pi)
    assert p.cost == pytest.approx(math.pi**2 / 2)
    traj = integrate_extremal(p)
    assert abs(traj.S_z[-1]) < 1e-12 and abs(traj.S_x[-1]) < 1e-12


def test_theta_zero_is_zero_control():
    p = solve(ProblemSpec(0.0, 2.0, 3.0))
    assert "no_optimality_claim" in p.flags
    assert p.c == 0.0 and p.S_z_final == 2.0
    assert p.cost == pytest.approx(0.5 * 3.0 * 4.0)


def test_solve_dispatches_not_gate_and_snaps():
    assert solve(ProblemSpec(HALF_PI, 1.0, 2.0)) == simplest_extremal(2.0)
    near = solve(ProblemSpec(HALF_PI + 0.5 * SNAP_TOL, 1.0, 2.0))
    assert near.cost == simplest_extremal(2.0).cost
    p = solve(ProblemSpec(-HALF_PI, 1.0, 2.0))
    assert p.c == pytest.approx(-simplest_extremal(2.0).c)


def test_time_scaling_through_solve():
    T = 2.0
    p = solve(ProblemSpec(HALF_PI, T, 1.0))
    assert p.horizon == T
    assert p.cost == pytest.approx(simplest_extremal(T**3).cost / T, abs=1e-12)
    traj = integrate_extremal(p)
    assert abs(traj.theta[-1] - HALF_PI) < 1e-9
    assert cost_of(traj, 1.0) == pytest.approx(p.cost, abs=1e-8)


def test_shooting_on_longer_horizon():
    T = 2.0
    p = solve_general(ProblemSpec(HALF_PI, T, 1.0))
    assert p.cost == pytest.approx(simplest_extremal(T**3).cost / T, abs=1e-9)


def test_sweep_not_gate():
    gammas = np.geomspace(1e-2, 1e3, 12)
    result = sweep(gammas, ProblemSpec(HALF_PI))
    assert result.ok, result.violations
    assert np.all(np.diff(result.costs) >= 0)
    assert result.rows[0].regime == "no_switch" and result.rows[-1].regime == "one_pair_switch"


def test_sweep_reports_violations_from_bad_solver():
    def bogus(spec):
        p = simplest_extremal(spec.gamma)
        return replace(p, cost=100.0 - spec.gamma)

    result = sweep([0.1, 1.0], ProblemSpec(HALF_PI), solver=bogus)
    assert not result.ok
    assert any("outside" in v for v in result.violations)
    assert any("decreases" in v for v in result.violations)


def test_sweep_records_failures_and_continues():
    def flaky(spec):
        if spec.gamma == 1.0:
            raise NoConvergenceError("boom", bracket=(0, 1))
        return simplest_extremal(spec.gamma)

    result = sweep([0.5, 1.0, 2.0], ProblemSpec(HALF_PI), solver=flaky)
    assert [r.error for r in result.rows] == [None, "boom", None]
    assert not result.ok and not result.violations


def test_sweep_rejects_unsorted_grid():
    with pytest.raises(DomainError):
        sweep([2.0, 1.0], ProblemSpec(HALF_PI))
    with pytest.raises(DomainError):
        sweep([], ProblemSpec(HALF_PI))


def test_no_convergence_carries_bracket_and_residuals(monkeypatch):
    def failing_newton(F, x0, *args, **kwargs):
        return np.asarray(x0, dtype=float), np.array([0.5, 0.25]), False

    monkeypatch.setattr(cont, "_newton", failing_newton)
    spec = ProblemSpec(1.0, 1.0, 5.0)
    with pytest.raises(NoConvergenceError) as info:
        solve_general(spec)
    err = info.value
    assert err.residuals == (0.5, 0.25)
    lo, hi = err.bracket
    assert 0 < lo < hi
