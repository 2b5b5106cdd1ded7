"""Closed-form extremals for the NOT gate, cost formulas and bounds.

For theta_des = pi/2 on [0, 1] every extremal is parameterised by a single
k >= 0 and the elliptic-type kernels of :mod:`robustpulse.elliptic`:

* gamma <= gamma_c: no sign change, c = sqrt(k) I(k), S_x(1) = J/I, with k
  solving I^3(k) / J(k) = 2 gamma;
* gamma > gamma_c: one mirror pair of sign changes, c = -sqrt(k) I_1(k),
  S_x(1) = I_1^2 / (2 gamma), with k in (0, k_lim) solving I_1^3 / J_1 = 2 gamma.

As gamma -> infinity k tends to k_lim, the root of J_1, which gives the
minimum-energy control with zero first-order sensitivity.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .elliptic import Family, eval_I, eval_Im_Jm, eval_J
from .errors import BracketError, DomainError
from .quadrature import DEFAULT_CONFIG, QuadConfig

HALF_PI = 0.5 * math.pi
RESIDUAL_RTOL = 1e-10
K_EXPANSION_LIMIT = 1e8
NOT_GATE_TOL = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """One instance of the weighted energy + sensitivity problem."""

    theta_des: float
    horizon_T: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta_des):
            raise DomainError("theta_des must be finite")
        if not (self.horizon_T > 0 and math.isfinite(self.horizon_T)):
            raise DomainError("horizon_T must be finite and > 0")
        if not self.gamma >= 0:
            raise DomainError("gamma must be >= 0")

    @property
    def is_not_gate(self) -> bool:
        return abs(self.theta_des - HALF_PI) <= NOT_GATE_TOL


@dataclass(frozen=True)
class Regime:
    """Switch structure of an extremal: number of mirror pairs of sign changes.

    ``kind`` is ``"no_switch"``, ``"one_pair_switch"`` or ``"m_switch"``; the
    latter carries m and the sign of u(0).
    """

    kind: str
    m: int = 0
    sign: str | None = None

    def __str__(self) -> str:
        if self.kind == "m_switch":
            return f"m_switch({self.m},{self.sign})"
        return self.kind

    @classmethod
    def from_sign_changes(cls, n_changes: int, c: float) -> "Regime":
        if n_changes == 0:
            return NO_SWITCH
        if n_changes == 2 and c < 0:
            return ONE_PAIR
        return cls("m_switch", n_changes // 2, "minus" if c < 0 else "plus")


NO_SWITCH = Regime("no_switch")
ONE_PAIR = Regime("one_pair_switch", 1)
SPECIAL = Regime("constant")


@dataclass(frozen=True)
class ExtremalParams:
    """Finite parameterisation of an extremal on [0, horizon].

    a_z = -2 gamma S_z_final and a_x = -2 gamma S_x_final are the constants
    of u' = a_z sin 2theta - a_x cos 2theta.  ``k`` is c^2 / a for NOT-gate
    extremals (inf when a = 0) and inf where it has no meaning.
    """

    c: float
    S_z_final: float
    S_x_final: float
    a_z: float
    a_x: float
    k: float
    regime: Regime
    cost: float
    theta_des: float = HALF_PI
    gamma: float = 0.0
    horizon: float = 1.0
    flags: tuple[str, ...] = field(default=())

    @property
    def a(self) -> float:
        """Magnitude-with-sign of (a_z, a_x) along the target direction."""
        return -(self.a_z * math.cos(self.theta_des) + self.a_x * math.sin(self.theta_des))

    def rescaled(self, horizon: float) -> "ExtremalParams":
        """Map a unit-interval solution to [0, T] (gamma becomes gamma / T^3)."""
        T = float(horizon) / self.horizon
        if not T > 0:
            raise DomainError("horizon must be > 0")
        return replace(
            self,
            c=self.c / T,
            S_z_final=self.S_z_final * T,
            S_x_final=self.S_x_final * T,
            a_z=self.a_z / T**2,
            a_x=self.a_x / T**2,
            cost=self.cost / T,
            gamma=self.gamma / T**3,
            horizon=self.horizon * T,
        )

    def as_dict(self) -> dict:
        return {
            "theta_des": self.theta_des,
            "gamma": self.gamma,
            "horizon": self.horizon,
            "regime": str(self.regime),
            "c": self.c,
            "k": self.k,
            "a": self.a,
            "a_z": self.a_z,
            "a_x": self.a_x,
            "S_z_final": self.S_z_final,
            "S_x_final": self.S_x_final,
            "cost": self.cost,
            "flags": list(self.flags),
        }


# ---------------------------------------------------------------------------
# scalar root finding


def _bisect(f, lo: float, hi: float, target: float, increasing: bool) -> float:
    """Bisection for f(k) = target on a monotone bracket.

    Runs until the bracket collapses to adjacent floats or f hits the target
    to within a few ulps.  The RESIDUAL_RTOL contract is met long before
    that; the extra halvings matter near gamma_c, where c = sqrt(k) I(k)
    is very sensitive to k and the endpoint timing is ill-conditioned.
    """
    sign = 1.0 if increasing else -1.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        value = f(mid)
        if abs(value - target) <= 4e-16 * abs(target):
            return mid
        if sign * (value - target) < 0:
            lo = mid
        else:
            hi = mid


def gamma_critical(cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """I(0)^3 / (2 J(0)): the weight above which the NOT-gate control changes sign."""
    return _gamma_critical(cfg)


@functools.lru_cache(maxsize=8)
def _gamma_critical(cfg: QuadConfig) -> float:
    return eval_I(0.0, cfg) ** 3 / (2.0 * eval_J(0.0, cfg))


def _ratio_no_switch(k: float, cfg: QuadConfig) -> float:
    return eval_I(k, cfg) ** 3 / eval_J(k, cfg)


def solve_k_no_switch(gamma: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Unique k >= 0 with I^3(k) / J(k) = 2 gamma, for 0 < gamma <= gamma_c."""
    gc = gamma_critical(cfg)
    if not (0.0 < gamma <= gc):
        raise DomainError(f"gamma must lie in (0, {gc:.10g}], got {gamma!r}")
    target = 2.0 * gamma
    if gamma == gc:
        return 0.0
    f = functools.partial(_ratio_no_switch, cfg=cfg)
    hi = 1.0
    while f(hi) > target:
        hi *= 4.0
        if hi > K_EXPANSION_LIMIT:
            raise BracketError(f"no bracket for gamma={gamma!r} below k={K_EXPANSION_LIMIT:g}")
    lo = hi / 4.0 if hi > 1.0 else 0.0
    return _bisect(f, lo, hi, target, increasing=False)


@functools.lru_cache(maxsize=8)
def k_lim(cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Root of J_1 in (0, 1): the gamma -> infinity limit of the one-switch k."""
    def j1(k):
        return eval_Im_Jm(k, 1, Family.minus, cfg)[1]

    lo, hi = 0.0, 0.99
    if not (j1(lo) > 0 > j1(hi)):
        raise BracketError("J_1 does not change sign on [0, 0.99]")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        value = j1(mid)
        if value == 0.0:
            return mid
        if value > 0:
            lo = mid
        else:
            hi = mid


def solve_k_one_switch(gamma: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Unique k in (0, k_lim) with I_1^3(k) / J_1(k) = 2 gamma, for gamma > gamma_c."""
    gc = gamma_critical(cfg)
    if not gamma > gc:
        raise DomainError(f"gamma must exceed gamma_c = {gc:.10g}, got {gamma!r}")
    if math.isinf(gamma):
        return k_lim(cfg)
    target = 2.0 * gamma

    def f(k):
        i1, j1 = eval_Im_Jm(k, 1, Family.minus, cfg)
        return i1**3 / j1 if j1 > 0 else math.inf

    return _bisect(f, 0.0, k_lim(cfg), target, increasing=True)


# ---------------------------------------------------------------------------
# costs


def cost_C0(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Cost 1/2 k I^2 + 3/4 I J of the no-switch NOT-gate extremal."""
    i, j = eval_I(k, cfg), eval_J(k, cfg)
    return 0.5 * k * i * i + 0.75 * i * j


def cost_Cm(k: float, m: int, sign: Family | str = Family.minus,
            cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Cost 1/2 k I_m^2 + 3/4 I_m J_m of the 2m-switch family."""
    i, j = eval_Im_Jm(k, m, sign, cfg)
    return 0.5 * k * i * i + 0.75 * i * j


def cost_C1(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Cost of the one-pair-switch NOT-gate extremal."""
    return cost_Cm(k, 1, Family.minus, cfg)


def general_cost(c: float, S_z: float, S_x: float, gamma: float, horizon: float = 1.0) -> float:
    """Cost of an extremal from its parameters.

    Integrating the constant of motion gives the energy
    1/2 T c^2 - gamma T S_z + gamma |S|^2, so the total cost is
    1/2 T c^2 - gamma T S_z + 3/2 gamma |S|^2.
    """
    if gamma == 0:
        return 0.5 * horizon * c * c
    return 0.5 * horizon * c * c - gamma * horizon * S_z + 1.5 * gamma * (S_z * S_z + S_x * S_x)


def not_gate_cost_formula(params: ExtremalParams) -> float:
    """1/2 c^2 + 3/2 gamma S_x^2 (valid when cos theta_des = 0)."""
    if math.isinf(params.gamma):
        return 0.5 * params.c**2
    return 0.5 * params.c**2 + 1.5 * params.gamma * params.S_x_final**2


def tilted_cost_formula(params: ExtremalParams) -> float:
    """1/2 c^2 - gamma S_z + 3/2 gamma S_z^2 / cos^2 theta (cos theta_des != 0)."""
    cos_t = math.cos(params.theta_des)
    if abs(cos_t) < 1e-12:
        raise DomainError("formula needs cos(theta_des) != 0")
    g = params.gamma
    return 0.5 * params.c**2 - g * params.S_z_final + 1.5 * g * params.S_z_final**2 / cos_t**2


# ---------------------------------------------------------------------------
# NOT-gate solutions


def simplest_extremal(spec: ProblemSpec | float, cfg: QuadConfig = DEFAULT_CONFIG) -> ExtremalParams:
    """Closed-form optimal extremal for theta_des = pi/2 on [0, 1].

    Accepts a ProblemSpec or a bare gamma.  At gamma = gamma_c the no-switch
    branch is used (k = 0, c = 0).
    """
    if not isinstance(spec, ProblemSpec):
        spec = ProblemSpec(HALF_PI, 1.0, float(spec))
    if not spec.is_not_gate or spec.horizon_T != 1.0:
        raise DomainError("simplest_extremal needs theta_des = pi/2 and T = 1")
    gamma = spec.gamma
    if math.isinf(gamma):
        return limit_solution(cfg)
    if gamma == 0.0:
        s = 2.0 / math.pi
        return ExtremalParams(HALF_PI, 0.0, s, 0.0, 0.0, math.inf, NO_SWITCH,
                              math.pi**2 / 8.0, HALF_PI, 0.0)
    gc = gamma_critical(cfg)
    if gamma <= gc:
        k = solve_k_no_switch(gamma, cfg)
        i, j = eval_I(k, cfg), eval_J(k, cfg)
        c = math.sqrt(k) * i
        s = j / i
        regime = NO_SWITCH
        cost = 0.5 * k * i * i + 0.75 * i * j
    else:
        k = solve_k_one_switch(gamma, cfg)
        i1, j1 = eval_Im_Jm(k, 1, Family.minus, cfg)
        c = -math.sqrt(k) * i1
        s = i1 * i1 / (2.0 * gamma)
        regime = ONE_PAIR
        cost = 0.5 * k * i1 * i1 + 0.75 * i1 * j1
    return ExtremalParams(c, 0.0, s, 0.0, -2.0 * gamma * s, k, regime, cost, HALF_PI, gamma)


@functools.lru_cache(maxsize=8)
def limit_solution(cfg: QuadConfig = DEFAULT_CONFIG) -> ExtremalParams:
    """gamma -> infinity: minimum-energy NOT gate with zero first-order sensitivity."""
    k = k_lim(cfg)
    i1, _ = eval_Im_Jm(k, 1, Family.minus, cfg)
    a = i1 * i1
    return ExtremalParams(
        c=-math.sqrt(k) * i1, S_z_final=0.0, S_x_final=0.0, a_z=0.0, a_x=-a, k=k,
        regime=ONE_PAIR, cost=0.5 * k * a, theta_des=HALF_PI, gamma=math.inf,
    )


def uniform_upper_bound(cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Cost of the limit solution; bounds the NOT-gate cost for every gamma."""
    return limit_solution(cfg).cost


@dataclass(frozen=True)
class PiecewiseConstantControl:
    """Held control: ``levels[i]`` applies on (breakpoints[i], breakpoints[i+1]]."""

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    @property
    def energy(self) -> float:
        widths = np.diff(self.breakpoints)
        return 0.5 * float(np.sum(widths * np.square(self.levels)))

    def waveform(self, n_per_unit: int = 13):
        """Waveform on a uniform grid whose nodes include every breakpoint."""
        from .dynamics import Waveform

        t0, t1 = self.breakpoints[0], self.breakpoints[-1]
        grid = np.linspace(t0, t1, n_per_unit + 1)
        values = np.empty(len(grid))
        values[0] = self.levels[0]
        idx = np.searchsorted(self.breakpoints, 0.5 * (grid[:-1] + grid[1:])) - 1
        values[1:] = np.asarray(self.levels)[idx]
        return Waveform(grid, values, kind="hold")


def bang_zero_sensitivity() -> PiecewiseConstantControl:
    """Three-level control reaching pi/2 with zero first-order sensitivity.

    Level 13 pi / 6 rotates by pi/6 per 1/13 of the interval: +pi/6, then
    -5 pi/6 back, then +7 pi/6 forward, which lands on pi/2 and closes the
    sensitivity loop.
    """
    level = 13.0 * math.pi / 6.0
    return PiecewiseConstantControl((0.0, 1.0 / 13.0, 6.0 / 13.0, 1.0), (level, -level, level))


# ---------------------------------------------------------------------------
# bounds and certificates


def bounds(spec: ProblemSpec) -> tuple[float, float]:
    """Lower and upper bounds on the optimal cost.

    lower = theta^2 / (2T) is the minimum energy; upper adds the sensitivity
    cost of the constant control theta/T, gamma T^2 sin^2 theta / (2 theta^2).
    For theta_des = 0 the zero control gives gamma T^2 / 2.
    """
    th = spec.theta_des
    T = spec.horizon_T
    lower = th * th / (2.0 * T)
    if th == 0.0:
        return 0.0, 0.5 * spec.gamma * T * T
    sens = 0.5 * T * T * math.sin(th) ** 2 / (th * th)
    if sens < 1e-30:
        return lower, lower
    return lower, lower + spec.gamma * sens


def feasible_k_grid(m: int, sign: Family | str = Family.minus, n: int = 50,
                    cfg: QuadConfig = DEFAULT_CONFIG) -> np.ndarray:
    """k samples where the 2m-switch family can exist.

    Minus-family extremals need J_m(k) > 0 (it equals I_m^3 / (2 gamma)), so
    the grid stops just short of the root of J_m.  The plus family is sampled
    on [0, 0.98].
    """
    sign = Family(sign)
    if sign is Family.plus:
        return np.linspace(0.0, 0.98, n)
    root = _jm_root(m, cfg)
    return np.linspace(0.0, root * (1.0 - 1e-6), n)


@functools.lru_cache(maxsize=16)
def _jm_root(m: int, cfg: QuadConfig) -> float:
    if m == 1:
        return k_lim(cfg)

    def jm(k):
        return eval_Im_Jm(k, m, Family.minus, cfg)[1]

    lo, hi = 0.0, 0.99
    if jm(hi) > 0:
        return hi
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if jm(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Certificate:
    """Minimum costs of the competing switch families versus the simplest extremal."""

    gamma: float
    simplest_cost: float
    family_minima: dict
    plus_min_sample: float

    @property
    def margin(self) -> float:
        return min(self.family_minima.values()) - self.simplest_cost

    def holds(self, margin: float = 0.0) -> bool:
        return self.margin > margin


def optimality_certificate(gamma: float, n: int = 50, cfg: QuadConfig = DEFAULT_CONFIG) -> Certificate:
    """Compare the simplest extremal against the m = 2, 3 minus and m = 1, 2 plus families.

    Each family cost is minimised over its feasible k grid; every member of
    that family costs at least this much, whatever gamma is.
    """
    simplest = simplest_extremal(gamma, cfg).cost
    minima = {}
    for m, sign in ((2, Family.minus), (3, Family.minus), (1, Family.plus), (2, Family.plus)):
        ks = feasible_k_grid(m, sign, n, cfg)
        minima[f"{sign.value}{m}"] = min(cost_Cm(k, m, sign, cfg) for k in ks)
    plus_min = min(minima["plus1"], minima["plus2"])
    return Certificate(gamma, simplest, minima, plus_min)
