"""
Exception hierarchy for the Hawkes/INAR estimator.

Every error carries a human readable message plus a details dict, and a class level
exit code used by the command-line entry point (0 success, 1 usage, 2 domain failure,
3 I/O or parse).
"""

from typing import Any, Dict, Optional


class HawkesException(Exception):
    """Base exception for all domain errors."""

    exit_code: int = 2

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if not self.details:
            return self.message
        return f"{self.message} ({self.details})"


class InvalidParameterException(HawkesException):
    """A tuning parameter or index lies outside its admissible range."""

    exit_code = 1


class WindowTooShortException(HawkesException):
    """The observation window is shorter than one bin."""


class EvaluationException(HawkesException):
    """An excitement function returned a non-finite value."""


class RejectedSpecException(HawkesException):
    """A model specification cannot be simulated (unstable or unbounded support)."""


class InvalidOrderException(HawkesException):
    """The autoregressive order is not smaller than the number of bins."""


class UnderdeterminedException(HawkesException):
    """Too few usable bins for the number of coefficients."""


class SingularDesignException(HawkesException):
    """The Gram matrix of the design is rank deficient or ill-conditioned."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        hint = "try a larger bin size or a smaller support"
        super().__init__(f"{message}; {hint}", details)


class DiagnosticsUnavailableException(HawkesException):
    """A fit is missing the covariance estimate a summary needs."""


class DegenerateResidualCovarianceException(HawkesException):
    """The residual covariance of an order candidate is not positive definite."""


class SelectionFailedException(HawkesException):
    """No selection candidate produced a usable criterion value."""


class InsufficientEventsException(HawkesException):
    """Not enough events or residuals for a diagnostic."""


class InputFormatException(HawkesException):
    """An input file could not be parsed."""

    exit_code = 3
