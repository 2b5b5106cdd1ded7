from __future__ import annotations

import math

import numpy as np
import pytest

from robustpulse.dynamics import Waveform, integrate_extremal
from robustpulse.errors import DomainError
from robustpulse.extremal import ProblemSpec
from robustpulse.twoqubit import (
    TwoQubitSpec,
    decouple,
    endpoint_residuals,
    integrate_two_qubit,
    pmp_costate_check,
    propagated_sensitivity,
    recombine,
    solve_two_qubit,
    split_controls,
    two_qubit_sensitivity,
    with_controls,
)

from conftest import HALF_PI


def test_decouple_examples():
    plus, minus = decouple(TwoQubitSpec(HALF_PI, math.pi / 3, 4.0, 2.0))
    assert plus == ProblemSpec(HALF_PI + math.pi / 3, 2.0, 4.0)
    assert minus == ProblemSpec(HALF_PI - math.pi / 3, 2.0, 4.0)


def test_spec_validation():
    with pytest.raises(DomainError):
        TwoQubitSpec(math.nan, 0.0)
    with pytest.raises(DomainError):
        TwoQubitSpec(0.0, 0.0, -1.0)
    with pytest.raises(DomainError):
        TwoQubitSpec(0.0, 0.0, 1.0, 0.0)


def _random_controls(rng, n=401):
    t = np.linspace(0, 1, n)
    coeff = rng.normal(size=(2, 3))
    u1 = sum(c * np.cos((j + 1) * t) for j, c in enumerate(coeff[0]))
    u2 = sum(c * np.sin((j + 1) * t) for j, c in enumerate(coeff[1]))
    return t, u1, u2


def test_recombine_then_split_is_identity(not_gate_params):
    a = integrate_extremal(not_gate_params[1.0])
    b = integrate_extremal(not_gate_params[20.0])
    traj = recombine(a, b)
    up, um = split_controls(traj)
    np.testing.assert_allclose(up, a.u, atol=1e-12)
    np.testing.assert_allclose(um, b.u, atol=1e-12)
    pm = traj.plus_minus()
    np.testing.assert_allclose(pm["theta_plus"], a.theta, atol=1e-9)
    np.testing.assert_allclose(pm["theta_minus"], b.theta, atol=1e-9)


def test_recombine_needs_shared_grid(not_gate_params):
    a = integrate_extremal(not_gate_params[1.0], n_steps=1000)
    b = integrate_extremal(not_gate_params[1.0], n_steps=2000)
    with pytest.raises(DomainError):
        recombine(a, b)


@pytest.mark.parametrize("seed", range(3))
def test_plus_minus_equations_hold_for_any_control(seed):
    # the +- variables obey the one-qubit equations with the +- controls
    from robustpulse.dynamics import integrate_control

    t, u1, u2 = _random_controls(np.random.default_rng(seed))
    traj = integrate_two_qubit(Waveform(t, np.column_stack([u1, u2])), n_steps=400)
    pm = traj.plus_minus()
    for key, u in (("plus", u1 + u2), ("minus", u1 - u2)):
        single = integrate_control(Waveform(t, u), 0.0, n_steps=400)
        np.testing.assert_allclose(pm[f"theta_{key}"], single.theta, atol=1e-12)
        assert np.max(np.abs(pm[f"S_z_{key}"] - single.S_z)) < 1e-8
        assert np.max(np.abs(pm[f"S_x_{key}"] - single.S_x)) < 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_sensitivity_matches_propagator(seed):
    t, u1, u2 = _random_controls(np.random.default_rng(10 + seed))
    traj = integrate_two_qubit(Waveform(t, np.column_stack([u1, u2])), n_steps=400)
    direct = traj.final_sensitivities()
    prop = propagated_sensitivity(traj)
    for pair in direct:
        assert prop[pair] == pytest.approx(direct[pair], abs=1e-8)


@pytest.mark.parametrize("pair", [(HALF_PI, HALF_PI), (HALF_PI, math.pi / 3), (1.0, 0.2)])
@pytest.mark.parametrize("gamma", [0.0, 1.0, 10.0])
def test_solve_two_qubit_cost_split(pair, gamma):
    spec = TwoQubitSpec(*pair, gamma)
    sol = solve_two_qubit(spec)
    traj, cost = sol
    assert abs(2 * cost - (sol.params_plus.cost + sol.params_minus.cost)) < 1e-6
    assert max(abs(d) for d in endpoint_residuals(traj, spec)) < 1e-6
    assert sol.sensitivity == pytest.approx(two_qubit_sensitivity(traj))


def test_pi_pair_equivalence_in_residuals():
    # theta+ = pi reached as pi, theta- = 0: both angles end at pi/2
    traj = integrate_two_qubit(Waveform([0.0, 1.0], np.array([[HALF_PI, HALF_PI]] * 2), "linear"), 100)
    assert endpoint_residuals(traj, TwoQubitSpec(-HALF_PI, -HALF_PI)) == pytest.approx((0.0, 0.0), abs=1e-12)
    d = endpoint_residuals(traj, TwoQubitSpec(-HALF_PI, HALF_PI))
    assert abs(d[0]) == pytest.approx(math.pi)


@pytest.mark.parametrize("gamma", [1.0, 10.0])
def test_pmp_conditions_on_solution(gamma):
    sol = solve_two_qubit(TwoQubitSpec(HALF_PI, math.pi / 3, gamma), n_steps=4000)
    check = pmp_costate_check(sol.trajectory, gamma)
    assert check["a_drift"] < 1e-8
    assert check["transversality"] < 1e-8
    assert check["trajectory_gap"] < 1e-8


def test_pmp_check_rejects_non_extremal():
    sol = solve_two_qubit(TwoQubitSpec(HALF_PI, math.pi / 3, 10.0), n_steps=2000)
    traj = sol.trajectory
    bent = with_controls(traj, traj.u1 * (1 + 0.05 * traj.t), traj.u2)
    check = pmp_costate_check(bent, 10.0)
    assert check["trajectory_gap"] > 1e-4 or check["transversality"] > 1e-4


def test_hold_energy_is_exact():
    t = np.linspace(0, 1, 5)
    w = Waveform(t, np.column_stack([[0, 1, 1, -1, -1], [0, 2, 2, 2, 2]]).astype(float), "hold")
    traj = integrate_two_qubit(w)
    assert traj.energy() == pytest.approx(0.5 * (1 + 4))
