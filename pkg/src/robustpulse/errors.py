"""Exception types raised by robustpulse."""

from __future__ import annotations


class RobustPulseError(Exception):
    """Base class for all library errors."""


class DomainError(RobustPulseError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(RobustPulseError, RuntimeError):
    """A numerical procedure did not reach its tolerance."""


class BracketError(ConvergenceError):
    """No sign-change bracket could be established for a root."""


class NoConvergenceError(ConvergenceError):
    """The shooting / continuation search failed.

    Carries the last bracket used for pruning and the residuals of the best
    candidate seen, so callers can report them.
    """

    def __init__(self, message: str, bracket=None, residuals=None):
        super().__init__(message)
        self.bracket = bracket
        self.residuals = residuals


class ModelError(RobustPulseError, ValueError):
    """Malformed Hamiltonian model (dimension mismatch, non-Hermitian input)."""


class VerificationError(RobustPulseError):
    """An independent check of a synthesized solution failed."""
