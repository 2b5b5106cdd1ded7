"""Shooting with continuation in gamma for arbitrary target angles.

An extremal is fixed by two numbers: the initial control c and the
multiplier a in (a_z, a_x) = -a (cos theta_des, sin theta_des).  The final
sensitivity vector of an optimal trajectory is parallel to
(cos theta_des, sin theta_des), say S(T) = rho (cos, sin), and the
multipliers satisfy a = 2 gamma rho, so the boundary map is

    (c, a) -> (theta(T) - theta_des,  2 gamma rho(T) - a).

At gamma = 0 the answer is the constant control (c = theta/T, a = 0).  The
weight is then raised along a geometric ladder, each rung warm-started from
the previous one, and candidate roots that violate the monotonicity and
growth bounds on the optimal cost are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import DEFAULT_STEPS, cost_of, integrate_extremal, shoot, sign_changes
from .errors import DomainError, NoConvergenceError
from .extremal import (
    HALF_PI,
    NO_SWITCH,
    ExtremalParams,
    ProblemSpec,
    Regime,
    bounds,
    general_cost,
    simplest_extremal,
)
from .quadrature import DEFAULT_CONFIG, QuadConfig

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
# targets this close to pi/2 or pi (e.g. typed as 1.5707963268) use the exact
# closed-form / constant-control answers
SNAP_TOL = 1e-9
LADDER_RATIO = 1.5
COARSE_STEPS = 2000
NEWTON_TOL = 1e-12
MAX_LIFTS = 4


@dataclass(frozen=True)
class Normalized:
    """theta_des = sign * theta (mod 2 pi) with theta in [0, pi]."""

    theta: float
    sign: int
    original: float


def normalize_angle(theta_des: float) -> Normalized:
    """Reduce to [0, 2 pi), then reflect (pi, 2 pi) onto (0, pi)."""
    reduced = math.fmod(theta_des, TWO_PI)
    if reduced < 0:
        reduced += TWO_PI
    if reduced > TWO_PI - ANGLE_TOL:
        reduced = 0.0
    if abs(reduced - math.pi) <= SNAP_TOL:
        return Normalized(math.pi, 1, theta_des)
    if reduced <= math.pi + ANGLE_TOL:
        return Normalized(min(reduced, math.pi), 1, theta_des)
    return Normalized(TWO_PI - reduced, -1, theta_des)


def reflect(params: ExtremalParams) -> ExtremalParams:
    """Mirror an extremal through theta -> -theta (same cost)."""
    return replace(
        params,
        c=-params.c,
        S_x_final=-params.S_x_final,
        a_x=-params.a_x,
        theta_des=-params.theta_des,
        flags=params.flags + ("reflected",),
    )


def _lifts(theta: float):
    """Nonnegative representatives of theta + 2 pi j in increasing size, with signs."""
    out = [(theta, 1)]
    j = 1
    while len(out) < MAX_LIFTS:
        out.append((TWO_PI * j - theta, -1))
        out.append((TWO_PI * j + theta, 1))
        j += 1
    return out[:MAX_LIFTS]


# ---------------------------------------------------------------------------
# boundary map and Newton


class _BoundaryMap:
    def __init__(self, theta: float, gamma: float, horizon: float, n_steps: int):
        self.theta = theta
        self.gamma = gamma
        self.horizon = horizon
        self.n_steps = n_steps
        self.cos_t = math.cos(theta)
        self.sin_t = math.sin(theta)
        # dividing by max(1, 2 gamma) keeps the second residual O(1) for large gamma
        self.scale = max(1.0, 2.0 * gamma)

    def endpoint(self, x):
        c, a = x
        th, u, sz, sx = shoot(c, -a * self.cos_t, -a * self.sin_t, self.n_steps, self.horizon)
        return th, u, sz, sx

    def __call__(self, x) -> np.ndarray:
        th, _, sz, sx = self.endpoint(x)
        rho = sz * self.cos_t + sx * self.sin_t
        return np.array([th - self.theta, (2.0 * self.gamma * rho - x[1]) / self.scale])

    def orthogonal(self, x) -> float:
        """Component of S(T) orthogonal to the target direction; zero on optimal extremals."""
        _, _, sz, sx = self.endpoint(x)
        return -sz * self.sin_t + sx * self.cos_t


def _newton(F, x0, tol: float = NEWTON_TOL, max_iter: int = 40):
    """Damped Newton with a forward-difference Jacobian.  Returns (x, r, ok)."""
    x = np.array(x0, dtype=float)
    r = F(x)
    nr = float(np.max(np.abs(r)))
    if not math.isfinite(nr):
        return x, r, False
    for _ in range(max_iter):
        if nr <= tol:
            return x, r, True
        jac = np.empty((2, 2))
        for i in range(2):
            h = 1e-7 * max(1.0, abs(x[i]))
            xp = x.copy()
            xp[i] += h
            jac[:, i] = (F(xp) - r) / h
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return x, r, False
        cap = 2.0 + float(np.max(np.abs(x)))
        size = float(np.max(np.abs(dx)))
        if not math.isfinite(size):
            return x, r, False
        if size > cap:
            dx *= cap / size
        lam = 1.0
        while True:
            xn = x + lam * dx
            rn = F(xn)
            nrn = float(np.max(np.abs(rn)))
            if math.isfinite(nrn) and nrn < (1.0 - 1e-4 * lam) * nr:
                break
            lam *= 0.5
            if lam < 1.0 / 256:
                # stagnation at roundoff level still counts as converged
                return x, r, nr <= 1e3 * tol
        x, r, nr = xn, rn, nrn
    return x, r, nr <= 1e3 * tol


# ---------------------------------------------------------------------------
# continuation


@dataclass
class _Rung:
    gamma: float
    x: np.ndarray
    cost: float


def _cost(theta: float, gamma: float, horizon: float, x) -> float:
    c, a = x
    if gamma == 0:
        return 0.5 * horizon * c * c
    rho = a / (2.0 * gamma)
    return general_cost(c, rho * math.cos(theta), rho * math.sin(theta), gamma, horizon)


def _admissible(theta, horizon, rung: _Rung, prev: _Rung | None, F, tol=1e-7) -> bool:
    lower, upper = bounds(ProblemSpec(theta, horizon, rung.gamma))
    if not (lower - tol <= rung.cost <= upper + tol * max(1.0, upper)):
        return False
    if prev is not None:
        if rung.cost < prev.cost - tol * max(1.0, prev.cost):
            return False
        if rung.cost > prev.cost + horizon**2 * (rung.gamma - prev.gamma) + tol:
            return False
    return abs(F.orthogonal(rung.x)) <= 1e-6 * max(1.0, horizon)


def _start_patterns(theta: float, gamma: float, horizon: float):
    c0 = theta / horizon
    rho0 = horizon * math.sin(theta) / theta if theta else horizon
    a_mag = min(2.0 * gamma * abs(rho0), 20.0 / horizon**2) or 1.0
    for c in (c0, -c0, c0 + math.pi / horizon, -(c0 + math.pi / horizon)):
        for a in (a_mag, -a_mag):
            yield np.array([c, a])


def _multistart(theta, gamma, horizon, n_steps, prev):
    F = _BoundaryMap(theta, gamma, horizon, n_steps)
    best = None
    for x0 in _start_patterns(theta, gamma, horizon):
        x, _, ok = _newton(F, x0)
        if not ok:
            continue
        rung = _Rung(gamma, x, _cost(theta, gamma, horizon, x))
        if _admissible(theta, horizon, rung, prev, F) and (best is None or rung.cost < best.cost):
            best = rung
    return best


def _continue(theta: float, gamma: float, horizon: float, continuation_steps: int | None,
              coarse_steps: int) -> _Rung:
    base = _Rung(0.0, np.array([theta / horizon, 0.0]), 0.5 * theta * theta / horizon)
    if gamma == 0.0:
        return base
    g_start = min(gamma, 0.05 / horizon**3)
    n_rungs = max(1, math.ceil(math.log(gamma / g_start) / math.log(LADDER_RATIO)))
    if continuation_steps:
        n_rungs = max(n_rungs, int(continuation_steps))
    ladder = [g_start * (gamma / g_start) ** (i / n_rungs) for i in range(n_rungs + 1)]
    rho0 = horizon * math.sin(theta) / theta if theta else horizon

    history = [base]
    pending = list(reversed(ladder))
    halvings = 0
    last_residual = None
    while pending:
        g = pending.pop()
        prev = history[-1]
        F = _BoundaryMap(theta, g, horizon, coarse_steps)
        if len(history) >= 2 and history[-2].gamma > 0:
            p0, p1 = history[-2], history[-1]
            guess = p1.x + (p1.x - p0.x) * (g - p1.gamma) / (p1.gamma - p0.gamma)
        else:
            guess = np.array([prev.x[0], 2.0 * g * rho0])
        x, r, ok = _newton(F, guess)
        if not ok and len(history) >= 2:
            x, r, ok = _newton(F, np.array([prev.x[0], prev.x[1] * g / max(prev.gamma, 1e-300)]))
        last_residual = r
        rung = _Rung(g, x, _cost(theta, g, horizon, x)) if ok else None
        if rung is not None and _admissible(theta, horizon, rung, prev if prev.gamma > 0 else None, F):
            history.append(rung)
            halvings = 0
            continue
        # step too long (or wrong branch): insert a midpoint rung
        if halvings < 20 and prev.gamma > 0 and g / prev.gamma > 1.0 + 1e-6:
            pending.append(g)
            pending.append(math.sqrt(g * prev.gamma))
            halvings += 1
            continue
        rung = _multistart(theta, g, horizon, coarse_steps, prev if prev.gamma > 0 else None)
        if rung is None:
            lower, upper = bounds(ProblemSpec(theta, horizon, g))
            raise NoConvergenceError(
                f"continuation stalled at gamma={g:.6g} for theta={theta:.12g}",
                bracket=(lower, upper),
                residuals=None if last_residual is None else tuple(float(v) for v in last_residual),
            )
        history.append(rung)
        halvings = 0
    return history[-1]


def _finish(theta: float, gamma: float, horizon: float, x, n_steps: int,
            flags: tuple[str, ...]) -> ExtremalParams:
    F = _BoundaryMap(theta, gamma, horizon, n_steps)
    if gamma > 0:
        x, r, ok = _newton(F, x)
        if not ok:
            raise NoConvergenceError(
                f"final polish failed at gamma={gamma:.6g}",
                bracket=bounds(ProblemSpec(theta, horizon, gamma)),
                residuals=tuple(float(v) for v in r),
            )
    c, a = (float(v) for v in x)
    if gamma > 0:
        rho = a / (2.0 * gamma)
    else:
        rho = F.endpoint(x)[2] * math.cos(theta) + F.endpoint(x)[3] * math.sin(theta)
    S_z, S_x = rho * math.cos(theta), rho * math.sin(theta)
    cost = general_cost(c, S_z, S_x, gamma, horizon)
    k = c * c / a if a > 0 else math.inf
    params = ExtremalParams(c, S_z, S_x, -a * math.cos(theta), -a * math.sin(theta), k,
                            NO_SWITCH, cost, theta, gamma, horizon, flags)
    traj = integrate_extremal(params, n_steps=n_steps)
    check = cost_of(traj, gamma)
    if abs(check - cost) > 1e-6 * max(1.0, cost):
        raise NoConvergenceError(
            f"cost formula {cost:.12g} disagrees with integrated cost {check:.12g}",
            residuals=tuple(traj.endpoint_residuals),
        )
    n_changes = len(sign_changes(traj.u, atol=1e-9 * max(1.0, abs(c))))
    return replace(params, regime=Regime.from_sign_changes(n_changes, c))


def _special(theta: float, gamma: float, horizon: float) -> ExtremalParams | None:
    if abs(theta - math.pi) <= ANGLE_TOL:
        c = math.pi / horizon
        return ExtremalParams(c, 0.0, 0.0, 0.0, 0.0, math.inf, NO_SWITCH,
                              0.5 * math.pi**2 / horizon, math.pi, gamma, horizon,
                              ("constant_zero_sensitivity",))
    if theta <= ANGLE_TOL:
        return ExtremalParams(0.0, horizon, 0.0, -2.0 * gamma * horizon, 0.0, math.inf,
                              NO_SWITCH, 0.5 * gamma * horizon**2, 0.0, gamma, horizon,
                              ("no_optimality_claim",))
    return None


def solve_general(spec: ProblemSpec, continuation_steps: int | None = None,
                  n_steps: int = DEFAULT_STEPS, coarse_steps: int = COARSE_STEPS) -> ExtremalParams:
    """Optimal extremal for any theta_des, gamma and horizon by shooting + continuation.

    The target is normalised to [0, pi] first (the reflection is undone on
    the result).  Other 2 pi lifts are tried only while the best cost found
    exceeds the minimum energy needed to reach them.
    """
    norm = normalize_angle(spec.theta_des)
    T = spec.horizon_T
    gamma = spec.gamma
    special = _special(norm.theta, gamma, T)
    if special is not None:
        return reflect(special) if norm.sign < 0 else special

    best = None
    failures = []
    for lift, (target, sign) in enumerate(_lifts(norm.theta)):
        if best is not None and best.cost <= 0.5 * target * target / T:
            break
        try:
            rung = _continue(target, gamma, T, continuation_steps, coarse_steps)
            flags = (f"lift={lift}",) if lift else ()
            params = _finish(target, gamma, T, rung.x, n_steps, flags)
        except NoConvergenceError as exc:
            failures.append(exc)
            continue
        if sign < 0:
            params = reflect(params)
        if best is None or params.cost < best.cost:
            best = params
    if best is None:
        exc = failures[0]
        raise NoConvergenceError(str(exc), bracket=exc.bracket, residuals=exc.residuals)
    return reflect(best) if norm.sign < 0 else best


def solve(spec: ProblemSpec, cfg: QuadConfig = DEFAULT_CONFIG,
          n_steps: int = DEFAULT_STEPS) -> ExtremalParams:
    """Dispatch: closed form for the NOT gate (any horizon, via time scaling),
    the constant-control special cases, shooting otherwise."""
    norm = normalize_angle(spec.theta_des)
    if abs(norm.theta - HALF_PI) <= SNAP_TOL:
        T = spec.horizon_T
        params = simplest_extremal(spec.gamma * T**3, cfg)
        if T != 1.0:
            params = params.rescaled(T)
        return reflect(params) if norm.sign < 0 else params
    return solve_general(spec, n_steps=n_steps)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    params: ExtremalParams | None
    cost: float
    lower_bound: float
    upper_bound: float
    regime: str
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations and all(row.error is None for row in self.rows)

    @property
    def costs(self) -> np.ndarray:
        return np.array([row.cost for row in self.rows])


def sweep(gammas, template: ProblemSpec, solver=solve, tol: float = 1e-9) -> SweepResult:
    """Solve along an ascending gamma grid and check the cost-curve properties.

    Checked per row: lower <= cost <= upper.  Between successful rows:
    cost nondecreasing and C(g2) <= C(g1) + T^2 (g2 - g1).  A failing solve
    is recorded on its row and the sweep continues.
    """
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise DomainError("gamma grid is empty")
    if any(b < a for a, b in zip(gammas, gammas[1:])):
        raise DomainError("gamma grid must be sorted ascending")
    T = template.horizon_T
    rows = []
    violations = []
    for g in gammas:
        spec = replace(template, gamma=g)
        lower, upper = bounds(spec)
        try:
            params = solver(spec)
        except (NoConvergenceError, DomainError) as exc:
            rows.append(SweepRow(g, None, math.nan, lower, upper, "failed", str(exc)))
            continue
        rows.append(SweepRow(g, params, params.cost, lower, upper, str(params.regime)))
        slack = tol * max(1.0, params.cost)
        if not lower - slack <= params.cost <= upper + slack:
            violations.append(f"gamma={g:.12g}: cost {params.cost:.12g} outside [{lower:.12g}, {upper:.12g}]")
    good = [row for row in rows if row.error is None]
    for r1, r2 in zip(good, good[1:]):
        slack = tol * max(1.0, r2.cost)
        if r2.cost < r1.cost - slack:
            violations.append(f"cost decreases between gamma={r1.gamma:.12g} and {r2.gamma:.12g}")
        if r2.cost > r1.cost + T * T * (r2.gamma - r1.gamma) + slack:
            violations.append(f"growth cap exceeded between gamma={r1.gamma:.12g} and {r2.gamma:.12g}")
    return SweepResult(tuple(rows), tuple(violations))
