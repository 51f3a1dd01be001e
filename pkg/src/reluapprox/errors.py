"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

__all__ = [
    "ReluApproxError",
    "InvalidParameter",
    "DimensionMismatch",
    "IncompatibleArchitecture",
    "HypothesisViolation",
    "BudgetExceeded",
    "DataSourceExhausted",
]


class ReluApproxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(ReluApproxError, ValueError):
    """A scalar argument lies outside its admissible range."""


class DimensionMismatch(ReluApproxError, ValueError):
    """Array shapes or layer interfaces do not fit together."""


class IncompatibleArchitecture(ReluApproxError, ValueError):
    """A network cannot be placed into the requested architecture."""


class HypothesisViolation(ReluApproxError, ValueError):
    """The inputs of a guarantee do not satisfy its preconditions.

    Parameters
    ----------
    clause : str
        Short human-readable form of the violated condition, for example
        ``"c >= 2L"``.
    detail : str, optional
        Extra context such as the offending values.
    """

    def __init__(self, clause: str, detail: str = "") -> None:
        self.clause = clause
        self.detail = detail
        message = f"hypothesis violated: {clause}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class BudgetExceeded(ReluApproxError, ValueError):
    """A requested enumeration or grid would be larger than allowed."""


class DataSourceExhausted(ReluApproxError, RuntimeError):
    """A finite data source ran out of samples."""
