"""Exception types shared across the library."""

from __future__ import annotations


class FlatrackError(Exception):
    """Base class for all library-specific errors."""


class DimensionError(FlatrackError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class NumericError(FlatrackError, ValueError):
    """Non-finite values where finite numbers are required."""


class DomainError(FlatrackError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(FlatrackError, ArithmeticError):
    """A matrix or map that must be invertible is (numerically) singular."""


class InconsistencyError(FlatrackError, ArithmeticError):
    """An internal identity that must hold failed beyond tolerance.

    Signals either a bug or an ill-conditioned system, never a routine
    user-input problem.
    """


class ConvergenceError(FlatrackError, RuntimeError):
    """An iteration exhausted its budget; carries the best iterate."""

    def __init__(self, message: str, best=None, iterations: int | None = None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class ConfigError(FlatrackError, ValueError):
    """Invalid scenario configuration; lists every violation at once."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {v}" for v in self.violations))
