"""Two qubits with sigma_z (x) sigma_z crosstalk.

Each qubit is rotated about y by its own control, H = u1 Y(x)1 + u2 1(x)Y
(up to the sign convention of :mod:`robustpulse.sensitivity`), and the
uncertain coupling delta sigma_z (x) sigma_z is suppressed to first order.
With Y_i = exp(i theta_i sigma_y) the first-order sensitivity is

    Z^1_1 = -i sum_{a,b in {z,x}} S_ab sigma_a (x) sigma_b,
    S_ab' = f_a(theta_1) f_b(theta_2),  f_z = cos 2theta,  f_x = sin 2theta.

In the variables theta+- = theta1 +- theta2, u+- = u1 +- u2,
S_z+- = S_zz -+ S_xx and S_x+- = S_xz +- S_zx the system splits into two
copies of the one-qubit problem with the same gamma, and the two-qubit cost
is half the sum of the two one-qubit costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .continuation import solve
from .dynamics import DEFAULT_STEPS, Trajectory, Waveform, integrate_extremal
from .errors import ConvergenceError, DomainError, NoConvergenceError, VerificationError
from .extremal import ExtremalParams, ProblemSpec
from .sensitivity import SIGMA_X, SIGMA_Z, crosstalk_model, propagate_sensitivity

SPLIT_TOL = 1e-6
PAIRS = ("zz", "zx", "xz", "xx")


@dataclass(frozen=True)
class TwoQubitSpec:
    theta1_des: float
    theta2_des: float
    gamma: float = 0.0
    horizon_T: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.theta1_des) and math.isfinite(self.theta2_des)):
            raise DomainError("target angles must be finite")
        if not self.gamma >= 0:
            raise DomainError("gamma must be >= 0")
        if not (self.horizon_T > 0 and math.isfinite(self.horizon_T)):
            raise DomainError("horizon_T must be finite and > 0")


@dataclass(frozen=True)
class TwoQubitTrajectory:
    """Samples of (t, theta1, theta2, u1, u2, S_zz, S_zx, S_xz, S_xx)."""

    t: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    S_zz: np.ndarray
    S_zx: np.ndarray
    S_xz: np.ndarray
    S_xx: np.ndarray
    control_kind: str = "smooth"

    COLUMNS = ("t", "theta1", "theta2", "u1", "u2", "S_zz", "S_zx", "S_xz", "S_xx")

    def __post_init__(self):
        n = len(self.t)
        for name in self.COLUMNS:
            arr = np.array(getattr(self, name), dtype=float)
            if len(arr) != n:
                raise DomainError("two-qubit trajectory columns differ in length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    def final_sensitivities(self) -> dict:
        return {p: float(getattr(self, "S_" + p)[-1]) for p in PAIRS}

    def energy(self) -> float:
        if self.control_kind == "hold":
            dt = np.diff(self.t)
            return 0.5 * float(np.sum(dt * (self.u1[1:] ** 2 + self.u2[1:] ** 2)))
        from .dynamics import _integrate_samples
        return 0.5 * _integrate_samples(self.t, self.u1**2 + self.u2**2)

    def cost(self, gamma: float) -> float:
        s = self.final_sensitivities()
        return self.energy() + 0.5 * gamma * sum(v * v for v in s.values())

    def plus_minus(self) -> dict:
        """The +- variables computed from the coupled samples."""
        return {
            "theta_plus": self.theta1 + self.theta2,
            "theta_minus": self.theta1 - self.theta2,
            "S_z_plus": self.S_zz - self.S_xx,
            "S_z_minus": self.S_zz + self.S_xx,
            "S_x_plus": self.S_xz + self.S_zx,
            "S_x_minus": self.S_xz - self.S_zx,
        }


def decouple(spec: TwoQubitSpec) -> tuple[ProblemSpec, ProblemSpec]:
    """The two one-qubit problems for theta1 + theta2 and theta1 - theta2."""
    return (
        ProblemSpec(spec.theta1_des + spec.theta2_des, spec.horizon_T, spec.gamma),
        ProblemSpec(spec.theta1_des - spec.theta2_des, spec.horizon_T, spec.gamma),
    )


def _controls_waveform(t, u1, u2, kind):
    return Waveform(t, np.column_stack([u1, u2]), kind=kind)


def integrate_two_qubit(control: Waveform, n_steps: int | None = None) -> TwoQubitTrajectory:
    """RK4 for theta_i' = u_i and S_ab' = f_a(theta_1) f_b(theta_2) from zero."""
    if n_steps is None:
        n_steps = len(control.t) - 1
    left, mid, right = control.stage_values(n_steps)
    h = control.duration / n_steps
    cos, sin = math.cos, math.sin

    def rates(a, b):
        c1, s1, c2, s2 = cos(2 * a), sin(2 * a), cos(2 * b), sin(2 * b)
        return (c1 * c2, c1 * s2, s1 * c2, s1 * s2)

    out = np.zeros((n_steps + 1, 6))
    th1 = th2 = 0.0
    s = [0.0, 0.0, 0.0, 0.0]
    for i in range(n_steps):
        l1, l2 = float(left[i][0]), float(left[i][1])
        m1, m2 = float(mid[i][0]), float(mid[i][1])
        r1, r2 = float(right[i][0]), float(right[i][1])
        k1 = rates(th1, th2)
        k2 = rates(th1 + 0.5 * h * l1, th2 + 0.5 * h * l2)
        k3 = rates(th1 + 0.5 * h * m1, th2 + 0.5 * h * m2)
        k4 = rates(th1 + h * m1, th2 + h * m2)
        th1 += h / 6 * (l1 + 4 * m1 + r1)
        th2 += h / 6 * (l2 + 4 * m2 + r2)
        for j in range(4):
            s[j] += h / 6 * (k1[j] + 2 * (k2[j] + k3[j]) + k4[j])
        out[i + 1] = (th1, th2, *s)
    t = np.linspace(control.t[0], control.t[-1], n_steps + 1)
    u = control.node_values(n_steps)
    return TwoQubitTrajectory(t, out[:, 0], out[:, 1], u[:, 0], u[:, 1], out[:, 2], out[:, 3],
                              out[:, 4], out[:, 5],
                              control_kind="hold" if control.kind == "hold" else "smooth")


def recombine(sol_plus: Trajectory, sol_minus: Trajectory) -> TwoQubitTrajectory:
    """Physical controls u_{1,2} = (u+ +- u-) / 2, then integrate the coupled system directly."""
    if len(sol_plus.t) != len(sol_minus.t) or np.max(np.abs(sol_plus.t - sol_minus.t)) > 1e-12:
        raise DomainError("plus and minus trajectories must share a time grid")
    u1 = 0.5 * (sol_plus.u + sol_minus.u)
    u2 = 0.5 * (sol_plus.u - sol_minus.u)
    kind = "hold" if "hold" in (sol_plus.control_kind, sol_minus.control_kind) else "cubic"
    return integrate_two_qubit(_controls_waveform(sol_plus.t, u1, u2, kind))


def split_controls(traj: TwoQubitTrajectory) -> tuple[np.ndarray, np.ndarray]:
    """(u+, u-) from the physical controls; inverse of the recombination map."""
    return traj.u1 + traj.u2, traj.u1 - traj.u2


def two_qubit_sensitivity(traj: TwoQubitTrajectory) -> float:
    """||Z^1_1(T)||^2 = S_zz^2 + S_zx^2 + S_xz^2 + S_xx^2."""
    return sum(v * v for v in traj.final_sensitivities().values())


def pauli_components(z: np.ndarray) -> dict:
    """S_ab from Z^1_1 = -i sum S_ab sigma_a (x) sigma_b."""
    paulis = {"z": SIGMA_Z, "x": SIGMA_X}
    out = {}
    for p in PAIRS:
        basis = np.kron(paulis[p[0]], paulis[p[1]])
        out[p] = float(np.real(1j * np.trace(basis.conj().T @ z) / 4.0))
    return out


def propagated_sensitivity(traj: TwoQubitTrajectory, n_steps: int | None = None) -> dict:
    """S_ab from the generic sensitivity propagator on the four-dimensional model."""
    kind = "hold" if traj.control_kind == "hold" else "cubic"
    control = _controls_waveform(traj.t, traj.u1, traj.u2, kind)
    n_steps = len(traj.t) - 1 if n_steps is None else n_steps
    tensor = propagate_sensitivity(crosstalk_model(), control, 1, n_steps)
    return pauli_components(tensor[(1, 1)])


def endpoint_residuals(traj: TwoQubitTrajectory, spec: TwoQubitSpec) -> tuple[float, float]:
    """Angle errors modulo the equivalence (theta1, theta2) ~ (theta1 + pi, theta2 + pi).

    Shifting theta+ or theta- by 2 pi moves both angles by pi, which only
    flips the sign of Y1 (x) Y2.  A shift that moves one angle by an odd
    multiple of pi and the other by an even one is not an equivalence and is
    reported as a full residual.
    """
    d1 = float(traj.theta1[-1]) - spec.theta1_des
    d2 = float(traj.theta2[-1]) - spec.theta2_des
    n1 = round(d1 / math.pi)
    n2 = round(d2 / math.pi)
    if (n1 - n2) % 2:
        return d1, d2
    return d1 - n1 * math.pi, d2 - n2 * math.pi


def pmp_costate_check(traj: TwoQubitTrajectory, gamma: float, n_steps: int | None = None) -> dict:
    """Co-integrate the coupled state/costate system with mu_0 = -1.

    Starts from theta = S = 0, lambda_i = u_i(0) and
    lambda_ab(0) = -gamma S_ab(T), integrates with the extremal feedback
    u_i = lambda_i and reports: the drift of a_ab = 2 (lambda_ab - gamma S_ab),
    max |lambda_ab(T)| (transversality) and the largest gap to the sampled
    angles of ``traj``.
    """
    if n_steps is None:
        n_steps = len(traj.t) - 1
    T = traj.horizon
    h = T / n_steps
    s_T = traj.final_sensitivities()
    cos, sin = math.cos, math.sin

    def rhs(y):
        th1, th2, szz, szx, sxz, sxx, l1, l2, lzz, lzx, lxz, lxx = y
        c1, s1, c2, s2 = cos(2 * th1), sin(2 * th1), cos(2 * th2), sin(2 * th2)
        b = (lzz - gamma * szz, lzx - gamma * szx, lxz - gamma * sxz, lxx - gamma * sxx)
        f = (c1 * c2, c1 * s2, s1 * c2, s1 * s2)
        df1 = (-2 * s1 * c2, -2 * s1 * s2, 2 * c1 * c2, 2 * c1 * s2)
        df2 = (-2 * c1 * s2, 2 * c1 * c2, -2 * s1 * s2, 2 * s1 * c2)
        dl1 = -sum(bi * di for bi, di in zip(b, df1))
        dl2 = -sum(bi * di for bi, di in zip(b, df2))
        return (l1, l2, *f, dl1, dl2, *(gamma * fi for fi in f))

    y = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, float(traj.u1[0]), float(traj.u2[0]),
         *(-gamma * s_T[p] for p in PAIRS))
    a0 = None
    drift = 0.0
    gap = 0.0
    stride = (len(traj.t) - 1) // n_steps if (len(traj.t) - 1) % n_steps == 0 else None
    for i in range(n_steps + 1):
        a_now = [2 * (y[8 + j] - gamma * y[2 + j]) for j in range(4)]
        if a0 is None:
            a0 = a_now
        drift = max(drift, max(abs(x - x0) for x, x0 in zip(a_now, a0)))
        if stride is not None:
            idx = i * stride
            gap = max(gap, abs(y[0] - traj.theta1[idx]), abs(y[1] - traj.theta2[idx]))
        if i == n_steps:
            break
        k1 = rhs(y)
        k2 = rhs(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
        k3 = rhs(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
        k4 = rhs(tuple(a + h * b for a, b in zip(y, k3)))
        y = tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
                  for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
    return {
        "a_drift": drift,
        "transversality": max(abs(v) for v in y[8:]),
        "trajectory_gap": gap if stride is not None else math.nan,
    }


@dataclass(frozen=True)
class TwoQubitSolution:
    """Result of solve_two_qubit; unpacks as (trajectory, cost)."""

    trajectory: TwoQubitTrajectory
    cost: float
    spec: TwoQubitSpec
    params_plus: ExtremalParams
    params_minus: ExtremalParams
    plus_trajectory: Trajectory = field(repr=False)
    minus_trajectory: Trajectory = field(repr=False)
    split_residual: float = 0.0
    endpoint_residuals: tuple[float, float] = (0.0, 0.0)
    flags: tuple[str, ...] = ()

    def __iter__(self):
        yield self.trajectory
        yield self.cost

    @property
    def sensitivity(self) -> float:
        return two_qubit_sensitivity(self.trajectory)


def _solve_branch(label: str, spec: ProblemSpec, n_steps: int):
    try:
        params = solve(spec, n_steps=n_steps)
    except (NoConvergenceError, ConvergenceError) as exc:
        raise NoConvergenceError(f"{label} branch: {exc}",
                                 bracket=getattr(exc, "bracket", None),
                                 residuals=getattr(exc, "residuals", None)) from exc
    return params, integrate_extremal(params, n_steps=n_steps)


def solve_two_qubit(spec: TwoQubitSpec, n_steps: int = DEFAULT_STEPS) -> TwoQubitSolution:
    """Solve both decoupled problems, recombine and verify on the coupled system.

    The returned cost is computed from the coupled integration; it must equal
    half the sum of the branch costs to within 1e-6, else VerificationError.
    """
    spec_plus, spec_minus = decouple(spec)
    params_plus, traj_plus = _solve_branch("plus", spec_plus, n_steps)
    params_minus, traj_minus = _solve_branch("minus", spec_minus, n_steps)
    traj = recombine(traj_plus, traj_minus)
    cost = traj.cost(spec.gamma)
    split = abs(2.0 * cost - (params_plus.cost + params_minus.cost))
    if split > SPLIT_TOL:
        raise VerificationError(
            f"cost split violated: 2C = {2 * cost:.12g}, C+ + C- = "
            f"{params_plus.cost + params_minus.cost:.12g}"
        )
    flags = tuple(f"plus:{f}" for f in params_plus.flags) + tuple(f"minus:{f}" for f in params_minus.flags)
    return TwoQubitSolution(traj, cost, spec, params_plus, params_minus, traj_plus, traj_minus,
                            split, endpoint_residuals(traj, spec), flags)


def branch_tag(params: ExtremalParams) -> str:
    """Human-readable label for a branch solution."""
    if "constant_zero_sensitivity" in params.flags:
        return "constant / zero sensitivity"
    if "no_optimality_claim" in params.flags:
        return "zero control / no optimality claim"
    return str(params.regime)


def with_controls(traj: TwoQubitTrajectory, u1, u2) -> TwoQubitTrajectory:
    """Re-integrate the coupled system under new physical controls on the same grid."""
    return integrate_two_qubit(_controls_waveform(traj.t, np.asarray(u1), np.asarray(u2), "cubic"))


__all__ = [
    "TwoQubitSpec", "TwoQubitTrajectory", "TwoQubitSolution", "decouple", "recombine",
    "solve_two_qubit", "two_qubit_sensitivity", "propagated_sensitivity", "pauli_components",
    "integrate_two_qubit", "endpoint_residuals", "pmp_costate_check", "split_controls",
    "branch_tag", "with_controls",
]
