"""Robust (sensitivity-minimising) control pulses for one and two qubits."""

from __future__ import annotations

__version__ = "0.1.0"

from .continuation import SweepResult, SweepRow, normalize_angle, solve, solve_general, sweep
from .dynamics import (
    Trajectory,
    Waveform,
    conserved_residual,
    cost_of,
    integrate_control,
    integrate_extremal,
    rescale,
    verify_symmetry,
)
from .elliptic import QuadKernel, eval_A, eval_B, eval_F, eval_I, eval_Im_Jm, eval_J
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    ModelError,
    NoConvergenceError,
    RobustPulseError,
    VerificationError,
)
from .extremal import (
    ExtremalParams,
    ProblemSpec,
    bang_zero_sensitivity,
    bounds,
    cost_C0,
    cost_C1,
    cost_Cm,
    gamma_critical,
    limit_solution,
    simplest_extremal,
    solve_k_no_switch,
    solve_k_one_switch,
)
from .quadrature import QuadConfig
from .sensitivity import BipartiteModel, SensitivityTensor, propagate_sensitivity
from .twoqubit import TwoQubitSpec, TwoQubitTrajectory, decouple, recombine, solve_two_qubit

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
