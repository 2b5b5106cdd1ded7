"""Elliptic-type integrals behind the NOT-gate extremals.

Notation (s = sin x):

    I(k) = int_0^{pi/2} dx / sqrt(k + s)            k >= 0
    J(k) = int_0^{pi/2} s dx / sqrt(k + s)          k >= 0
    A(k) = int_{-asin k}^0 dx / sqrt(k + s)         0 <= k < 1
    B(k) = int_{-asin k}^0 s dx / sqrt(k + s)       0 <= k < 1

and the switch-family combinations

    I_m  = 2m A + (2m - 1) I,    J_m  = 2m B + (2m - 1) J     (u(0) < 0)
    I_+m = 2m A + (2m + 1) I,    J_+m = 2m B + (2m + 1) J     (u(0) >= 0)

Every integrand handed to the quadrature routine is bounded: I and J are
integrated in t with x = t**2, A and B in their desingularised form
sqrt(k) * int_0^{pi/2} sqrt(1 + s) / sqrt(1 - k^2 s^2) dx.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import DEFAULT_CONFIG, QuadConfig, integrate

HALF_PI = 0.5 * math.pi
_SQRT_HALF_PI = math.sqrt(HALF_PI)


class KernelKind(str, enum.Enum):
    I = "I"
    J = "J"
    A = "A"
    B = "B"
    Im = "Im"
    Jm = "Jm"
    Ipm = "Ipm"
    Jpm = "Jpm"


class Family(str, enum.Enum):
    """Sign of u(0) for the 2m-switch extremal families."""

    minus = "minus"
    plus = "plus"


@dataclass(frozen=True)
class QuadKernel:
    """One of the eight kernels evaluated at a given k (and m)."""

    kind: KernelKind
    k: float
    m: int | None = None

    def __post_init__(self):
        kind = KernelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (KernelKind.I, KernelKind.J):
            if self.m is not None:
                raise DomainError(f"kernel {kind.value} takes no m")
            _check_nonneg(self.k)
        else:
            _check_unit(self.k)
            needs_m = kind not in (KernelKind.A, KernelKind.B)
            if needs_m and (self.m is None or int(self.m) != self.m or self.m < 1):
                raise DomainError(f"kernel {kind.value} needs an integer m >= 1")
            if not needs_m and self.m is not None:
                raise DomainError(f"kernel {kind.value} takes no m")

    def evaluate(self, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
        kind = self.kind
        if kind is KernelKind.I:
            return eval_I(self.k, cfg)
        if kind is KernelKind.J:
            return eval_J(self.k, cfg)
        if kind is KernelKind.A:
            return eval_A(self.k, cfg)
        if kind is KernelKind.B:
            return eval_B(self.k, cfg)
        family = Family.minus if kind in (KernelKind.Im, KernelKind.Jm) else Family.plus
        i_m, j_m = eval_Im_Jm(self.k, self.m, family, cfg)
        return i_m if kind in (KernelKind.Im, KernelKind.Ipm) else j_m


def _check_nonneg(k: float) -> None:
    if not (k >= 0.0) or math.isinf(k):
        raise DomainError(f"k must be finite and >= 0, got {k!r}")


def _check_unit(k: float) -> None:
    if not (0.0 <= k < 1.0):
        raise DomainError(f"k must lie in [0, 1), got {k!r}")


def eval_I(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """I(k); the k = 0 endpoint singularity is removed by x = t**2."""
    _check_nonneg(k)

    def integrand(t):
        return 2.0 * t / np.sqrt(k + np.sin(t * t))

    return integrate(integrand, 0.0, _SQRT_HALF_PI, cfg)


def eval_J(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """J(k).  The integrand is bounded already; x = t**2 only smooths sqrt(s)."""
    _check_nonneg(k)

    def integrand(t):
        s = np.sin(t * t)
        return 2.0 * t * s / np.sqrt(k + s)

    return integrate(integrand, 0.0, _SQRT_HALF_PI, cfg)


def _unit_factor(x: np.ndarray, k: float) -> np.ndarray:
    # sqrt(1 + s) / sqrt(1 - k^2 s^2) with 1 - k s = (1 - k) + 2 k sin^2(pi/4 - x/2)
    # so the factor stays accurate as k -> 1 near x = pi/2.
    s = np.sin(x)
    one_minus_s = 2.0 * np.sin(0.25 * math.pi - 0.5 * x) ** 2
    return np.sqrt(1.0 + s) / np.sqrt(((1.0 - k) + k * one_minus_s) * (1.0 + k * s))


def eval_A(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    _check_unit(k)
    if k == 0.0:
        return 0.0
    return math.sqrt(k) * integrate(lambda x: _unit_factor(x, k), 0.0, HALF_PI, cfg)


def eval_B(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """B(k) <= 0; sin x is negative on the whole range (-asin k, 0)."""
    _check_unit(k)
    if k == 0.0:
        return 0.0
    value = integrate(lambda x: np.sin(x) * _unit_factor(x, k), 0.0, HALF_PI, cfg)
    return -k * math.sqrt(k) * value


def eval_Im_Jm(
    k: float,
    m: int,
    signed: Family | str = Family.minus,
    cfg: QuadConfig = DEFAULT_CONFIG,
) -> tuple[float, float]:
    """(I_m, J_m) for the minus family, (I_+m, J_+m) for the plus family."""
    _check_unit(k)
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m!r}")
    signed = Family(signed)
    weight = 2 * m - 1 if signed is Family.minus else 2 * m + 1
    a = eval_A(k, cfg)
    b = eval_B(k, cfg)
    return 2 * m * a + weight * eval_I(k, cfg), 2 * m * b + weight * eval_J(k, cfg)


def eval_F(k: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """Auxiliary integral whose positivity makes C_m increasing in k.

    F(k) = int_0^{pi/2} (8 - 3 s (3 - k^2 s^2)) sqrt(1 + s) / (1 - k^2 s^2)^{3/2} dx
    """
    _check_unit(k)

    def integrand(x):
        s = np.sin(x)
        one_minus_s = 2.0 * np.sin(0.25 * math.pi - 0.5 * x) ** 2
        denom = ((1.0 - k) + k * one_minus_s) * (1.0 + k * s)
        return (8.0 - 3.0 * s * (3.0 - k * k * s * s)) * np.sqrt(1.0 + s) / denom**1.5

    return integrate(integrand, 0.0, HALF_PI, cfg)
