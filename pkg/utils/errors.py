"""
Exception hierarchy for the secrecy outage laboratory.
Every error carries the process exit code the CLI reports for it.
"""

from config import EXIT_NUMERICAL, EXIT_VALIDATION


class SecrecyLabError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_NUMERICAL


class ValidationError(SecrecyLabError, ValueError):
    """Invalid parameters, schema violations or unsupported options."""

    exit_code = EXIT_VALIDATION


class DomainError(ValidationError):
    """Special-function argument outside the function's domain."""


class NumericalError(SecrecyLabError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy value."""

    exit_code = EXIT_NUMERICAL


class UnseparableContourError(NumericalError):
    """No vertical line separates the two pole families."""


class PrecisionNotReachedError(NumericalError):
    def __init__(self, message, best_estimate, abs_error):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.abs_error = abs_error


class SeriesNotConvergedError(NumericalError):
    def __init__(self, message, partial_value, terms, series=""):
        super().__init__(message)
        self.partial_value = partial_value
        self.terms = terms
        self.series = series


class ProbabilityRangeError(NumericalError):
    """A probability left [-slack, 1 + slack]."""


class NonGenericExponentsError(NumericalError):
    """Coincident or integer-spaced asymptotic exponents."""


class OutsideAsymptoticRegimeError(NumericalError):
    """Asymptotic CDFs are too large at the secrecy threshold."""


class QuadratureToleranceError(NumericalError):
    def __init__(self, message, best_value, abs_error):
        super().__init__(message)
        self.best_value = best_value
        self.abs_error = abs_error


def prefix_error(error, label):
    """Return a copy of a package error whose message names `label`."""
    message = f"{label}: {error}"
    if isinstance(error, PrecisionNotReachedError):
        return PrecisionNotReachedError(message, error.best_estimate, error.abs_error)
    if isinstance(error, SeriesNotConvergedError):
        return SeriesNotConvergedError(message, error.partial_value, error.terms, error.series)
    if isinstance(error, QuadratureToleranceError):
        return QuadratureToleranceError(message, error.best_value, error.abs_error)
    return type(error)(message)
