from __future__ import annotations

import json
import math

import numpy as np
import pytest

from robustpulse.dynamics import Waveform, integrate_extremal
from robustpulse.errors import ModelError
from robustpulse.sensitivity import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BipartiteModel,
    crosstalk_model,
    dephasing_model,
    hs_norm,
    propagate_sensitivity,
    random_model,
    taylor_residual,
)

from conftest import HALF_PI


def constant(value, duration=1.0):
    return Waveform([0.0, duration], [value, value], "linear")


def test_hs_norm_of_paulis():
    assert hs_norm(SIGMA_Z) == pytest.approx(1.0)
    assert hs_norm(np.kron(SIGMA_Z, SIGMA_Z)) == pytest.approx(1.0)
    assert hs_norm(np.zeros((3, 3))) == 0.0


def test_short_time_sensitivities_vanish():
    rng = np.random.default_rng(0)
    model = random_model(2, 2, rng)
    tensor = propagate_sensitivity(model, constant(0.7, 1e-9), max_order=2, n_steps=10)
    assert max(tensor.norms().values()) < 1e-8


def test_dephasing_closed_form():
    tensor = propagate_sensitivity(dephasing_model(), constant(HALF_PI), 1, 2000)
    assert hs_norm(tensor[(1, 1)]) ** 2 == pytest.approx(4 / math.pi**2, abs=1e-12)
    assert hs_norm(tensor[(1, 0)]) == 0.0


def test_dephasing_matches_scalar_sensitivities(limit_params):
    traj = integrate_extremal(limit_params, n_steps=2000)
    control = Waveform(traj.t, traj.u)
    z = propagate_sensitivity(dephasing_model(), control, 1, 2000)[(1, 1)]
    expected = -1j * (traj.S_z[-1] * SIGMA_Z + traj.S_x[-1] * SIGMA_X)
    np.testing.assert_allclose(z, expected, atol=1e-10)


def test_first_order_equals_quadrature_of_rotated_operator():
    # Z^1_1(T) = -i int X^dagger sigma_z X dt with X = exp(i theta sigma_y)
    u = 1.3
    tensor = propagate_sensitivity(dephasing_model(), constant(u), 1, 1000)
    x, w = np.polynomial.legendre.leggauss(40)
    t = 0.5 * (x + 1)
    acc = np.zeros((2, 2), dtype=complex)
    for ti, wi in zip(t, w):
        X = math.cos(u * ti) * np.eye(2) + 1j * math.sin(u * ti) * SIGMA_Y
        acc += 0.5 * wi * (X.conj().T @ SIGMA_Z @ X)
    np.testing.assert_allclose(tensor[(1, 1)], -1j * acc, atol=1e-12)


def test_tensor_indexing():
    tensor = propagate_sensitivity(dephasing_model(), constant(1.0), 2, 200)
    np.testing.assert_array_equal(tensor[(0, 0)], np.eye(2))
    with pytest.raises(KeyError):
        tensor[(3, 1)]
    with pytest.raises(KeyError):
        tensor[(1, 2)]


def test_crosstalk_product_structure():
    model = crosstalk_model()
    assert model.dim_S == 4 and model.n_controls == 2
    control = Waveform([0.0, 1.0], np.array([[0.0, 0.0], [0.0, 0.0]]), "linear")
    z = propagate_sensitivity(model, control, 1, 100)[(1, 1)]
    np.testing.assert_allclose(z, -1j * np.kron(SIGMA_Z, SIGMA_Z), atol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_taylor_validation_random_models(seed):
    rng = np.random.default_rng(seed)
    model = random_model(2, 2, rng)
    t = np.linspace(0, 1, 41)
    control = Waveform(t, np.sin(3 * t + seed))
    assert taylor_residual(model, control, 1e-3, 1e-3, order=2, n_steps=400) < 1e-8


def test_model_round_trip_json():
    rng = np.random.default_rng(3)
    model = random_model(2, 3, rng, n_controls=2)
    again = BipartiteModel.from_dict(json.loads(json.dumps(model.to_dict())))
    for name in ("H0", "H", "H1", "H2", "H_E"):
        np.testing.assert_allclose(getattr(again, name), getattr(model, name))


def test_from_dict_defaults():
    model = BipartiteModel.from_dict({"H": [[1, 0], [0, -1]], "controls": [[[0, 1], [1, 0]]]})
    assert model.dim_E == 1 and np.all(model.H0 == 0)


@pytest.mark.parametrize("data", [
    {"H": [[1, 0], [0, -1]]},
    {"controls": [[[0, 1], [1, 0]]]},
    {"H": [[0, 1], [0, 0]], "controls": [[[0, 1], [1, 0]]]},
    {"H": [[1, 0], [0, -1]], "controls": [[[0, 1, 0], [1, 0, 0], [0, 0, 0]]]},
    {"H": [[1, 0], [0, -1]], "controls": []},
    {"H": [[1, 0], [0, "x"]], "controls": [[[0, 1], [1, 0]]]},
    {"H": [1, 0], "controls": [[[0, 1], [1, 0]]]},
    {"H": np.eye(9).tolist(), "controls": [np.eye(9).tolist()]},
    {"H": [[1, 0], [0, -1]], "controls": [[[0, 1], [1, 0]]], "H_E": [[1, 0], [0, 1]], "H2": [[1]]},
])
def test_malformed_models(data):
    with pytest.raises(ModelError):
        BipartiteModel.from_dict(data)


def test_control_channel_mismatch():
    control = Waveform([0.0, 1.0], [1.0, 1.0], "linear")
    with pytest.raises(ModelError):
        propagate_sensitivity(crosstalk_model(), control, 1, 10)
    with pytest.raises(ModelError):
        propagate_sensitivity(dephasing_model(), control, 0, 10)
