"""Exception hierarchy shared across the engine."""

from __future__ import annotations

from typing import Any


class SpecMarginError(Exception):
    """Base class for all engine errors."""


class ValidationError(SpecMarginError, ValueError):
    """An input violated a documented precondition.

    ``row`` is the 1-based data row of the offending input line, when known.
    """

    def __init__(self, message: str, row: int | None = None) -> None:
        super().__init__(message)
        self.row = row


class ParseError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class DegenerateInputError(SpecMarginError, ValueError):
    """Input has no variation (or the model collapsed), so the quantity is undefined."""


class AlignmentError(ValidationError):
    """Returns and forecasts do not share the required dates."""


class ConvergenceError(SpecMarginError, RuntimeError):
    """The optimizer hit its iteration limit.

    The best parameter vector found so far is kept on ``fit``.
    """

    def __init__(self, message: str, fit: Any = None) -> None:
        super().__init__(message)
        self.fit = fit
