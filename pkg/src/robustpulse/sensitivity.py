"""Sensitivity functions of a controlled system coupled to an environment.

The total Hamiltonian is

    H_tot = (H_S(t) + delta H) (x) 1_E + 1_S (x) H_E + eps H1 (x) H2,

with H_S(t) = H0 + sum_i u_i(t) K_i.  In the interaction picture with
respect to the nominal propagators X_S, X_E the propagator X_int is expanded
as

    X_int = sum_{n, j} Z^n_j delta^j eps^(n-j) / (j! (n-j)!),

and the coefficients obey

    i dZ^n_j/dt = j (H_int (x) 1) Z^{n-1}_{j-1} + (n-j) (H1_int (x) H2_int) Z^{n-1}_j,

with Z^0_0 = 1 and Z^n_j(0) = 0 otherwise.  Everything (X_S, X_E and all
Z^n_j up to the requested order) is advanced together by one RK4 pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_STEPS, Waveform
from .errors import ModelError

HERMITIAN_TOL = 1e-12
MAX_DIM = 8

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def hs_norm(a: np.ndarray) -> float:
    """Normalised Hilbert-Schmidt norm, ||A||^2 = Tr(A A^dagger) / d.

    With this choice every Pauli string is a unit vector (||sigma_z||^2 = 1
    on one qubit, ||sigma_z (x) sigma_z||^2 = 1 on two).
    """
    a = np.asarray(a)
    return math.sqrt(float(np.real(np.vdot(a, a))) / a.shape[0])


def _as_hermitian(name: str, m, dim: int | None = None) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ModelError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if arr.shape[0] > MAX_DIM:
        raise ModelError(f"{name} has dimension {arr.shape[0]} > {MAX_DIM}")
    if np.max(np.abs(arr - arr.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ModelError(f"{name} is not Hermitian")
    return arr


@dataclass(frozen=True)
class BipartiteModel:
    """System S (controlled) coupled to environment E.

    ``controls`` are the Hermitian operators K_i multiplying the control
    channels.  dim_E = 1 is allowed and turns off the environment.
    """

    H0: np.ndarray
    controls: tuple
    H: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H_E: np.ndarray

    def __post_init__(self):
        h0 = _as_hermitian("H0", self.H0)
        d_s = h0.shape[0]
        controls = tuple(_as_hermitian(f"control[{i}]", k, d_s) for i, k in enumerate(self.controls))
        if not controls:
            raise ModelError("at least one control Hamiltonian is required")
        object.__setattr__(self, "H0", h0)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "H", _as_hermitian("H", self.H, d_s))
        object.__setattr__(self, "H1", _as_hermitian("H1", self.H1, d_s))
        h_e = _as_hermitian("H_E", self.H_E)
        object.__setattr__(self, "H_E", h_e)
        object.__setattr__(self, "H2", _as_hermitian("H2", self.H2, h_e.shape[0]))

    @property
    def dim_S(self) -> int:
        return self.H0.shape[0]

    @property
    def dim_E(self) -> int:
        return self.H_E.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def H_S(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape != (self.n_controls,):
            raise ModelError(f"expected {self.n_controls} control values, got {u.shape}")
        out = self.H0.copy()
        for ui, k in zip(u, self.controls):
            out = out + ui * k
        return out

    def total_hamiltonian(self, u, delta: float, eps: float) -> np.ndarray:
        eye_s = np.eye(self.dim_S)
        eye_e = np.eye(self.dim_E)
        return (np.kron(self.H_S(u) + delta * self.H, eye_e)
                + np.kron(eye_s, self.H_E)
                + eps * np.kron(self.H1, self.H2))

    @classmethod
    def from_dict(cls, data: dict) -> "BipartiteModel":
        """Build from a JSON-style dict of matrices.

        Each matrix is a list of rows; entries are numbers or [re, im] pairs.
        Missing H0 / H1 / H2 / H_E default to zero (H_E and H2 to 1x1).
        """
        def mat(key, default=None):
            if key not in data:
                if default is None:
                    raise ModelError(f"model is missing {key!r}")
                return default
            return _parse_matrix(key, data[key])

        H = mat("H")
        d_s = H.shape[0]
        zero_s = np.zeros((d_s, d_s), dtype=complex)
        if "controls" not in data:
            raise ModelError("model is missing 'controls'")
        controls = tuple(_parse_matrix(f"controls[{i}]", c) for i, c in enumerate(data["controls"]))
        H_E = mat("H_E", np.zeros((1, 1), dtype=complex))
        return cls(
            H0=mat("H0", zero_s), controls=controls, H=H,
            H1=mat("H1", zero_s), H2=mat("H2", np.zeros_like(H_E)), H_E=H_E,
        )

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]
        return {
            "H0": enc(self.H0), "controls": [enc(k) for k in self.controls], "H": enc(self.H),
            "H1": enc(self.H1), "H2": enc(self.H2), "H_E": enc(self.H_E),
        }


def _parse_matrix(name: str, rows) -> np.ndarray:
    try:
        out = []
        for row in rows:
            parsed = []
            for z in row:
                if isinstance(z, (list, tuple)):
                    re, im = z
                    parsed.append(complex(float(re), float(im)))
                else:
                    parsed.append(complex(z))
            out.append(parsed)
        arr = np.array(out, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"cannot parse matrix {name!r}") from exc
    if arr.ndim != 2:
        raise ModelError(f"matrix {name!r} is not two-dimensional")
    return arr


def dephasing_model() -> BipartiteModel:
    """One qubit, control -sigma_y, uncertainty delta sigma_z, no environment.

    With H_S = -u sigma_y the nominal propagator is cos theta + i sin theta sigma_y
    and the first-order sensitivity is Z^1_1 = -i (S_z sigma_z + S_x sigma_x).
    """
    zero = np.zeros((1, 1), dtype=complex)
    return BipartiteModel(np.zeros((2, 2)), (-SIGMA_Y,), SIGMA_Z, np.zeros((2, 2)), zero, zero)


def crosstalk_model() -> BipartiteModel:
    """Two qubits with controls -sigma_y (x) 1 and -1 (x) sigma_y and sigma_z (x) sigma_z crosstalk.

    The coupling is the delta direction of a single four-dimensional system.
    """
    zero = np.zeros((1, 1), dtype=complex)
    zero4 = np.zeros((4, 4), dtype=complex)
    return BipartiteModel(
        zero4,
        (-np.kron(SIGMA_Y, IDENTITY_2), -np.kron(IDENTITY_2, SIGMA_Y)),
        np.kron(SIGMA_Z, SIGMA_Z), zero4, zero, zero,
    )


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix with spectral norm ``scale``."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    return scale * h / np.linalg.norm(h, 2)


def random_model(dim_S: int, dim_E: int, rng: np.random.Generator, n_controls: int = 1) -> BipartiteModel:
    """Random model with every operator of spectral norm 1."""
    return BipartiteModel(
        random_hermitian(dim_S, rng),
        tuple(random_hermitian(dim_S, rng) for _ in range(n_controls)),
        random_hermitian(dim_S, rng),
        random_hermitian(dim_S, rng),
        random_hermitian(dim_E, rng),
        random_hermitian(dim_E, rng),
    )


@dataclass(frozen=True)
class SensitivityTensor:
    """Z^n_j at the final time, for 1 <= n <= max_order and 0 <= j <= n.

    Z^0_0 is the identity and is not stored.
    """

    dim_S: int
    dim_E: int
    entries: dict
    max_order: int
    horizon: float = 1.0
    X_S: np.ndarray | None = field(default=None, repr=False)
    X_E: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, key) -> np.ndarray:
        n, j = key
        if n == 0 and j == 0:
            return np.eye(self.dim_S * self.dim_E, dtype=complex)
        if j > n or j < 0 or n > self.max_order:
            raise KeyError(key)
        return self.entries[(n, j)]

    def norms(self) -> dict:
        return {key: hs_norm(z) for key, z in sorted(self.entries.items())}

    def taylor(self, delta: float, eps: float, order: int | None = None) -> np.ndarray:
        """Truncated expansion of the interaction-picture propagator."""
        order = self.max_order if order is None else order
        out = np.eye(self.dim_S * self.dim_E, dtype=complex)
        for n in range(1, order + 1):
            for j in range(n + 1):
                coef = delta**j * eps ** (n - j) / (math.factorial(j) * math.factorial(n - j))
                out = out + coef * self.entries[(n, j)]
        return out


def _control_stages(control: Waveform, n_channels: int, n_steps: int):
    left, mid, right = control.stage_values(n_steps)
    stages = []
    for arr in (left, mid, right):
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape[1] != n_channels:
            raise ModelError(f"control has {arr.shape[1]} channels, model expects {n_channels}")
        stages.append(arr)
    return stages


def propagate_sensitivity(model: BipartiteModel, control: Waveform, max_order: int = 1,
                          n_steps: int = DEFAULT_STEPS) -> SensitivityTensor:
    """Integrate X_S, X_E and every Z^n_j (n <= max_order) to the end of ``control``."""
    if max_order < 1:
        raise ModelError("max_order must be >= 1")
    left, mid, right = _control_stages(control, model.n_controls, n_steps)
    d_s, d_e = model.dim_S, model.dim_E
    eye_e = np.eye(d_e)
    keys = [(n, j) for n in range(1, max_order + 1) for j in range(n + 1)]
    d = d_s * d_e
    h = control.duration / n_steps

    def rhs(u, xs, xe, zs):
        dxs = -1j * (model.H_S(u) @ xs)
        dxe = -1j * (model.H_E @ xe)
        xs_dag = xs.conj().T
        a = np.kron(xs_dag @ model.H @ xs, eye_e)
        b = np.kron(xs_dag @ model.H1 @ xs, xe.conj().T @ model.H2 @ xe)
        dz = {}
        for n, j in keys:
            acc = np.zeros((d, d), dtype=complex)
            if j >= 1:
                prev = zs.get((n - 1, j - 1))
                acc += j * (a @ prev) if prev is not None else j * a
            if n - j >= 1:
                prev = zs.get((n - 1, j))
                acc += (n - j) * (b @ prev) if prev is not None else (n - j) * b
            dz[(n, j)] = -1j * acc
        return dxs, dxe, dz

    def advance(xs, xe, zs, k, scale):
        return (xs + scale * k[0], xe + scale * k[1],
                {key: zs[key] + scale * k[2][key] for key in keys})

    xs = np.eye(d_s, dtype=complex)
    xe = np.eye(d_e, dtype=complex)
    zs = {key: np.zeros((d, d), dtype=complex) for key in keys}
    # Z^0_0 = 1 is represented by a missing key in the lookups above
    for i in range(n_steps):
        k1 = rhs(left[i], xs, xe, zs)
        k2 = rhs(mid[i], *advance(xs, xe, zs, k1, 0.5 * h))
        k3 = rhs(mid[i], *advance(xs, xe, zs, k2, 0.5 * h))
        k4 = rhs(right[i], *advance(xs, xe, zs, k3, h))
        xs = xs + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        xe = xe + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        zs = {key: zs[key] + h / 6 * (k1[2][key] + 2 * k2[2][key] + 2 * k3[2][key] + k4[2][key])
              for key in keys}
    return SensitivityTensor(d_s, d_e, zs, max_order, control.duration, xs, xe)


def interaction_propagator(model: BipartiteModel, control: Waveform, delta: float, eps: float,
                           n_steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Brute-force X_int(T) = (X_S (x) X_E)^dagger X_tot(T) at finite delta, eps."""
    left, mid, right = _control_stages(control, model.n_controls, n_steps)
    d_s, d_e = model.dim_S, model.dim_E
    h = control.duration / n_steps

    def rhs(u, xt, xs, xe):
        return (-1j * (model.total_hamiltonian(u, delta, eps) @ xt),
                -1j * (model.H_S(u) @ xs), -1j * (model.H_E @ xe))

    xt = np.eye(d_s * d_e, dtype=complex)
    xs = np.eye(d_s, dtype=complex)
    xe = np.eye(d_e, dtype=complex)
    for i in range(n_steps):
        k1 = rhs(left[i], xt, xs, xe)
        k2 = rhs(mid[i], *(y + 0.5 * h * k for y, k in zip((xt, xs, xe), k1)))
        k3 = rhs(mid[i], *(y + 0.5 * h * k for y, k in zip((xt, xs, xe), k2)))
        k4 = rhs(right[i], *(y + h * k for y, k in zip((xt, xs, xe), k3)))
        xt, xs, xe = (y + h / 6 * (a + 2 * b + 2 * c + e)
                      for y, a, b, c, e in zip((xt, xs, xe), k1, k2, k3, k4))
    return np.kron(xs, xe).conj().T @ xt


def taylor_residual(model: BipartiteModel, control: Waveform, delta: float = 1e-3,
                    eps: float = 1e-3, order: int = 2, n_steps: int = 2000) -> float:
    """Max-entry gap between the order-``order`` expansion and the brute-force propagator."""
    tensor = propagate_sensitivity(model, control, order, n_steps)
    exact = interaction_propagator(model, control, delta, eps, n_steps)
    return float(np.max(np.abs(tensor.taylor(delta, eps, order) - exact)))
