"""Single-qubit state + sensitivity integration and trajectory checks.

The nominal dynamics are

    theta' = u,   S_z' = cos(2 theta),   S_x' = sin(2 theta),

all starting from zero.  Along an extremal the control obeys
u' = a_z sin(2 theta) - a_x cos(2 theta) with constant a_z, a_x.  All
integrators here are classical fixed-step RK4 so that the sample grid is
uniform and mirror-symmetric about T/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

DEFAULT_STEPS = 10_000


class EndpointResiduals(NamedTuple):
    d_theta: float
    d_Sz: float
    d_Sx: float


class SymmetryResiduals(NamedTuple):
    res_theta: float
    res_u: float
    res_Sz: float
    res_Sx: float


@dataclass(frozen=True)
class Waveform:
    """Control samples on a uniform grid.

    ``kind`` selects how values between nodes are reconstructed:
    ``"cubic"`` (not-a-knot spline, for smooth extremal controls),
    ``"linear"``, or ``"hold"`` (piecewise constant; ``values[i]`` holds on
    the interval (t[i-1], t[i]], and ``values[0]`` is the value at t = 0).
    ``values`` may be 2-D with one column per control channel.
    """

    t: np.ndarray
    values: np.ndarray
    kind: str = "cubic"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or len(t) < 2 or v.shape[0] != len(t):
            raise DomainError("waveform needs >= 2 nodes and matching values")
        if np.any(np.diff(t) <= 0):
            raise DomainError("waveform nodes must be strictly increasing")
        if self.kind not in ("cubic", "linear", "hold"):
            raise DomainError(f"unknown waveform kind {self.kind!r}")
        if self.kind == "cubic" and len(t) < 4:
            object.__setattr__(self, "kind", "linear")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "cubic":
            return CubicSpline(self.t, self.values, axis=0)(t)
        if self.kind == "linear":
            if self.values.ndim == 1:
                return np.interp(t, self.t, self.values)
            return np.stack([np.interp(t, self.t, col) for col in self.values.T], axis=-1)
        idx = np.clip(np.searchsorted(self.t, t, side="left"), 0, len(self.t) - 1)
        return self.values[idx]

    def stage_values(self, n_steps: int):
        """Control at the left, middle and right of each of ``n_steps`` RK4 steps.

        For held waveforms all three equal the value of the interval that
        contains the step midpoint, so breakpoints must fall on step edges.
        """
        grid = np.linspace(self.t[0], self.t[-1], n_steps + 1)
        mids = 0.5 * (grid[:-1] + grid[1:])
        if self.kind == "hold":
            held = self(mids)
            return held, held, held
        return self(grid[:-1]), self(mids), self(grid[1:])

    def node_values(self, n_steps: int) -> np.ndarray:
        """Control sampled on the RK grid nodes."""
        grid = np.linspace(self.t[0], self.t[-1], n_steps + 1)
        if self.kind == "hold":
            out = np.empty((n_steps + 1,) + self.values.shape[1:])
            out[0] = self.values[0]
            out[1:] = self.stage_values(n_steps)[1]
            return out
        return self(grid)


@dataclass(frozen=True)
class Trajectory:
    """Densely sampled (t, theta, u, S_z, S_x) path.

    ``control_kind`` is ``"smooth"`` for extremals and ``"hold"`` for
    piecewise-constant controls (affects how the energy integral is taken).
    """

    t: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    S_z: np.ndarray
    S_x: np.ndarray
    theta_des: float
    gamma: float
    endpoint_residuals: EndpointResiduals
    control_kind: str = "smooth"
    params: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("t", "theta", "u", "S_z", "S_x"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.t)
        if any(len(getattr(self, name)) != n for name in ("theta", "u", "S_z", "S_x")):
            raise DomainError("trajectory columns differ in length")
        if n < 2 or np.any(np.diff(self.t) <= 0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def sample(self, i: int) -> tuple[float, float, float, float, float]:
        return (float(self.t[i]), float(self.theta[i]), float(self.u[i]),
                float(self.S_z[i]), float(self.S_x[i]))

    def with_control(self, u: np.ndarray) -> "Trajectory":
        """Copy with the control column replaced (used by negative tests)."""
        return replace(self, u=np.asarray(u, dtype=float))


# ---------------------------------------------------------------------------
# integrators


def shoot(c: float, a_z: float, a_x: float, n_steps: int = DEFAULT_STEPS,
          horizon: float = 1.0) -> tuple[float, float, float, float]:
    """Endpoint (theta, u, S_z, S_x) of the extremal system; no samples kept."""
    h = horizon / n_steps
    h2 = 0.5 * h
    h6 = h / 6.0
    sin = math.sin
    cos = math.cos
    th = 0.0
    u = c
    sz = 0.0
    sx = 0.0
    for _ in range(n_steps):
        s1 = sin(2.0 * th); c1 = cos(2.0 * th)
        du1 = a_z * s1 - a_x * c1
        th2 = th + h2 * u; u2 = u + h2 * du1
        s2 = sin(2.0 * th2); c2 = cos(2.0 * th2)
        du2 = a_z * s2 - a_x * c2
        th3 = th + h2 * u2; u3 = u + h2 * du2
        s3 = sin(2.0 * th3); c3 = cos(2.0 * th3)
        du3 = a_z * s3 - a_x * c3
        th4 = th + h * u3; u4 = u + h * du3
        s4 = sin(2.0 * th4); c4 = cos(2.0 * th4)
        du4 = a_z * s4 - a_x * c4
        th += h6 * (u + 2.0 * (u2 + u3) + u4)
        u += h6 * (du1 + 2.0 * (du2 + du3) + du4)
        sz += h6 * (c1 + 2.0 * (c2 + c3) + c4)
        sx += h6 * (s1 + 2.0 * (s2 + s3) + s4)
    return th, u, sz, sx


def _extremal_samples(c, a_z, a_x, n_steps, horizon):
    h = horizon / n_steps
    h2 = 0.5 * h
    h6 = h / 6.0
    sin = math.sin
    cos = math.cos
    out = np.empty((n_steps + 1, 4))
    th = 0.0
    u = c
    sz = 0.0
    sx = 0.0
    out[0] = (th, u, sz, sx)
    for i in range(1, n_steps + 1):
        s1 = sin(2.0 * th); c1 = cos(2.0 * th)
        du1 = a_z * s1 - a_x * c1
        th2 = th + h2 * u; u2 = u + h2 * du1
        s2 = sin(2.0 * th2); c2 = cos(2.0 * th2)
        du2 = a_z * s2 - a_x * c2
        th3 = th + h2 * u2; u3 = u + h2 * du2
        s3 = sin(2.0 * th3); c3 = cos(2.0 * th3)
        du3 = a_z * s3 - a_x * c3
        th4 = th + h * u3; u4 = u + h * du3
        s4 = sin(2.0 * th4); c4 = cos(2.0 * th4)
        du4 = a_z * s4 - a_x * c4
        th += h6 * (u + 2.0 * (u2 + u3) + u4)
        u += h6 * (du1 + 2.0 * (du2 + du3) + du4)
        sz += h6 * (c1 + 2.0 * (c2 + c3) + c4)
        sx += h6 * (s1 + 2.0 * (s2 + s3) + s4)
        out[i] = (th, u, sz, sx)
    return out


def integrate_extremal(params, theta_des: float | None = None,
                       n_steps: int = DEFAULT_STEPS) -> Trajectory:
    """Integrate the extremal system from (0, c, 0, 0) with the constants in ``params``.

    ``params`` is an ExtremalParams (anything with c, a_z, a_x, S_z_final,
    S_x_final, gamma and optionally horizon / theta_des attributes).
    """
    if n_steps < 100:
        raise DomainError("n_steps must be >= 100")
    if theta_des is None:
        theta_des = params.theta_des
    horizon = float(getattr(params, "horizon", 1.0))
    data = _extremal_samples(params.c, params.a_z, params.a_x, n_steps, horizon)
    t = np.linspace(0.0, horizon, n_steps + 1)
    residuals = EndpointResiduals(
        float(data[-1, 0] - theta_des),
        float(data[-1, 2] - params.S_z_final),
        float(data[-1, 3] - params.S_x_final),
    )
    return Trajectory(t, data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                      theta_des=float(theta_des), gamma=float(params.gamma),
                      endpoint_residuals=residuals, params=params)


def integrate_control(control: Waveform, theta_des: float, gamma: float = 0.0,
                      n_steps: int | None = None) -> Trajectory:
    """Integrate the nominal system under a prescribed control waveform.

    Held waveforms default to one RK step per node interval so that every
    breakpoint falls on a step edge; other kinds default to 10^4 steps.
    """
    if n_steps is None:
        n_steps = len(control.t) - 1 if control.kind == "hold" else DEFAULT_STEPS
    left, mid, right = control.stage_values(n_steps)
    h = control.duration / n_steps
    h2 = 0.5 * h
    h6 = h / 6.0
    sin = math.sin
    cos = math.cos
    th = sz = sx = 0.0
    out = np.zeros((n_steps + 1, 3))
    for i in range(n_steps):
        ul = float(left[i]); um = float(mid[i]); ur = float(right[i])
        # theta depends on u alone, so the stage angles are explicit
        t1 = th
        t2 = th + h2 * ul
        t3 = th + h2 * um
        t4 = th + h * um
        th += h6 * (ul + 4.0 * um + ur)
        sz += h6 * (cos(2 * t1) + 2.0 * (cos(2 * t2) + cos(2 * t3)) + cos(2 * t4))
        sx += h6 * (sin(2 * t1) + 2.0 * (sin(2 * t2) + sin(2 * t3)) + sin(2 * t4))
        out[i + 1] = (th, sz, sx)
    t = np.linspace(control.t[0], control.t[-1], n_steps + 1)
    u = control.node_values(n_steps)
    residuals = EndpointResiduals(float(out[-1, 0] - theta_des), float(out[-1, 1]),
                                  float(out[-1, 2]))
    kind = "hold" if control.kind == "hold" else "smooth"
    return Trajectory(t, out[:, 0], u, out[:, 1], out[:, 2], theta_des=float(theta_des),
                      gamma=float(gamma), endpoint_residuals=residuals,
                      control_kind=kind)


def integrate_costate_system(params, n_steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Full six-dimensional state/costate system with mu_0 = -1.

    Columns of the returned (n_steps + 1, 6) array are
    theta, S_z, S_x, lambda_theta, lambda_z, lambda_x.  The initial costates
    are lambda_theta = c, lambda_z = -gamma S_z(1), lambda_x = -gamma S_x(1),
    so that the transversality conditions lambda_z(T) = lambda_x(T) = 0 are
    what the check has to reproduce.
    """
    gamma = float(params.gamma)
    if not math.isfinite(gamma):
        raise DomainError("costate system needs a finite gamma")
    horizon = float(getattr(params, "horizon", 1.0))
    h = horizon / n_steps

    def rhs(y):
        th, sz, sx, lt, lz, lx = y
        s2 = math.sin(2 * th)
        c2 = math.cos(2 * th)
        return (lt, c2, s2,
                2 * (lz - gamma * sz) * s2 - 2 * (lx - gamma * sx) * c2,
                gamma * c2, gamma * s2)

    y = (0.0, 0.0, 0.0, params.c, -gamma * params.S_z_final, -gamma * params.S_x_final)
    out = np.empty((n_steps + 1, 6))
    out[0] = y
    for i in range(1, n_steps + 1):
        k1 = rhs(y)
        k2 = rhs(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
        k3 = rhs(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
        k4 = rhs(tuple(a + h * b for a, b in zip(y, k3)))
        y = tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
                  for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
        out[i] = y
    return out


# ---------------------------------------------------------------------------
# costs


def _integrate_samples(t: np.ndarray, y: np.ndarray) -> float:
    """Composite Simpson on a uniform grid with an even number of intervals,
    trapezoid otherwise."""
    n = len(t) - 1
    dt = np.diff(t)
    uniform = np.allclose(dt, dt[0], rtol=1e-6, atol=0.0)
    if uniform and n >= 2 and n % 2 == 0:
        h = dt[0]
        return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))
    return float(np.sum(0.5 * dt * (y[1:] + y[:-1])))


def energy_of(traj: Trajectory) -> float:
    """Control energy 1/2 int u^2 dt."""
    if traj.control_kind == "hold":
        return 0.5 * float(np.sum(np.diff(traj.t) * traj.u[1:] ** 2))
    return 0.5 * _integrate_samples(traj.t, traj.u**2)


def sensitivity_cost(traj: Trajectory) -> float:
    """Mayer form 1/2 (S_z(T)^2 + S_x(T)^2)."""
    return 0.5 * float(traj.S_z[-1] ** 2 + traj.S_x[-1] ** 2)


def sensitivity_cost_lagrange(traj: Trajectory) -> float:
    """Lagrange form int (S_z cos 2theta + S_x sin 2theta) dt."""
    integrand = traj.S_z * np.cos(2 * traj.theta) + traj.S_x * np.sin(2 * traj.theta)
    return _integrate_samples(traj.t, integrand)


def cost_of(traj: Trajectory, gamma: float) -> float:
    """Energy plus gamma times the first-order sensitivity cost."""
    return energy_of(traj) + gamma * sensitivity_cost(traj)


# ---------------------------------------------------------------------------
# checks


def conserved_residual(traj: Trajectory, params) -> float:
    """Max drift of u^2/2 + (a_z/2) cos 2theta + (a_x/2) sin 2theta from c^2/2 + a_z/2."""
    a_z = params.a_z
    a_x = params.a_x
    value = 0.5 * traj.u**2 + 0.5 * a_z * np.cos(2 * traj.theta) + 0.5 * a_x * np.sin(2 * traj.theta)
    reference = 0.5 * params.c**2 + 0.5 * a_z
    return float(np.max(np.abs(value - reference)))


def verify_symmetry(traj: Trajectory) -> SymmetryResiduals:
    """Residuals of the mirror symmetries t <-> T - t of an optimal trajectory.

    Needs a uniform grid (the reflected sample of index i is n - i).
    """
    dt = np.diff(traj.t)
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=0.0):
        raise DomainError("symmetry check needs a uniformly sampled trajectory")
    th_d = traj.theta_des
    rev = slice(None, None, -1)
    dz = traj.S_z[-1] - traj.S_z[rev]
    dx = traj.S_x[-1] - traj.S_x[rev]
    c2, s2 = math.cos(2 * th_d), math.sin(2 * th_d)
    return SymmetryResiduals(
        float(np.max(np.abs(traj.theta - (th_d - traj.theta[rev])))),
        float(np.max(np.abs(traj.u - traj.u[rev]))),
        float(np.max(np.abs(traj.S_z - (c2 * dz + s2 * dx)))),
        float(np.max(np.abs(traj.S_x - (s2 * dz - c2 * dx)))),
    )


def relation_residual(traj: Trajectory) -> float:
    """|S_z(T) sin(theta_des) - cos(theta_des) S_x(T)|."""
    th_d = traj.theta_des
    return abs(float(traj.S_z[-1]) * math.sin(th_d) - math.cos(th_d) * float(traj.S_x[-1]))


def sign_changes(u: np.ndarray, t: np.ndarray | None = None, atol: float = 0.0):
    """Indices (or interpolated times when ``t`` is given) where u changes sign."""
    u = np.asarray(u, dtype=float)
    nz = np.flatnonzero(np.abs(u) > atol)
    crossings = []
    for i0, i1 in zip(nz[:-1], nz[1:]):
        if np.sign(u[i0]) != np.sign(u[i1]):
            if t is None:
                crossings.append(int(i1))
            else:
                crossings.append(float(t[i0] - u[i0] * (t[i1] - t[i0]) / (u[i1] - u[i0])))
    return crossings


# ---------------------------------------------------------------------------
# time scaling


def rescale(traj: Trajectory, horizon: float) -> Trajectory:
    """Map a solution on [0, 1] to [0, T].

    theta(t) -> theta(t/T), u -> u(t/T)/T, S -> T S(t/T).  Energy scales by
    1/T and the sensitivity cost by T^2; gamma is mapped to gamma / T^3 so
    the rescaled trajectory solves the problem on [0, T].
    """
    if not horizon > 0:
        raise DomainError("horizon must be > 0")
    if not math.isclose(traj.horizon, 1.0, rel_tol=0, abs_tol=1e-12):
        raise DomainError("rescale expects a trajectory on [0, 1]")
    T = float(horizon)
    d = traj.endpoint_residuals
    params = traj.params.rescaled(T) if hasattr(traj.params, "rescaled") else None
    return Trajectory(
        traj.t * T, traj.theta.copy(), traj.u / T, traj.S_z * T, traj.S_x * T,
        theta_des=traj.theta_des, gamma=traj.gamma / T**3,
        endpoint_residuals=EndpointResiduals(d.d_theta, d.d_Sz * T, d.d_Sx * T),
        control_kind=traj.control_kind, params=params,
    )
