"""Exception types shared by the package."""

__all__ = ["PairspecError", "RegimeError", "DivergenceError",
           "QuadratureError", "ConvergenceError"]


class PairspecError(Exception):
    """Base class for all package errors."""


class RegimeError(PairspecError, ValueError):
    """Parameters lie outside the regime where a formula applies."""


class DivergenceError(PairspecError, ArithmeticError):
    """An integral or quasinorm is infinite for the given data."""


class QuadratureError(PairspecError, ArithmeticError):
    """A quadrature did not reach the requested tolerance."""


class ConvergenceError(PairspecError, RuntimeError):
    """An iterative solver or search did not converge."""
