"""Exception types shared across the package."""

from __future__ import annotations


class FaddeevError(Exception):
    """Base class for all package errors."""


class VarietyError(FaddeevError, ValueError):
    """A momentum or parameter does not lie on the required variety."""


class QuadratureError(FaddeevError, ArithmeticError):
    """Quadrature failed to converge within the subdivision budget.

    The best available estimate is kept on the exception so callers can
    decide whether it is still usable.
    """

    def __init__(self, message: str, value=None, abs_error=None):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error


class SpectralSingularity(FaddeevError, ArithmeticError):
    """The linear system is (numerically) singular at this momentum."""

    def __init__(self, message: str, det=None, condition=None):
        super().__init__(message)
        self.det = det
        self.condition = condition


class RenormalizationPole(FaddeevError, ValueError):
    """The cutoff sits on the pole of the renormalized coupling."""

    def __init__(self, message: str, pole: float):
        super().__init__(message)
        self.pole = pole


class BracketError(FaddeevError, ValueError):
    """No sign change was found where root refinement needs one."""
