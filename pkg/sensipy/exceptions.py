from typing import Optional

import numpy as np


class SensipyError(Exception):
    """Base class for errors raised by sensipy."""


class ValidationError(SensipyError, ValueError):
    """Raised when an argument violates an invariant of a domain type
    or the precondition of an operation."""


class DecompositionError(SensipyError, np.linalg.LinAlgError):
    """Raised when a matrix factorization fails,
    e.g., Cholesky after the maximal jitter."""


class ConvergenceError(SensipyError, ArithmeticError):
    """Raised when an iterative solver does not reach its tolerance."""


class UnboundedSupportError(ValidationError):
    """Raised when a risk functional has no bounded support set,
    so that no sensitivity bound can be formed."""

    def __init__(self, kind: str) -> None:
        super().__init__(
            f"{kind} has an unbounded support set; "
            "no sensitivity bound is available")
        self.kind = kind


class ConfigError(ValidationError):
    """Raised for schema violations in configuration files.

    Attributes:
        field: dotted path of the offending field, e.g. ``risk.alpha``
        line: line number in the JSON file, if known
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None) -> None:
        self.message = message
        self.field = field
        self.line = line
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        if self.field:
            return f"{self.field}: {self.message}"
        return self.message
