"""Exception hierarchy of the numerical core.

Every error raised on purpose by `ergodic` derives from `ErgodicLabError`, so
the runner can map domain failures to exit codes without catching unrelated
exceptions. Where a built-in exception has the same meaning the class also
derives from it (a dimension mismatch is still a `ValueError`).
"""

from typing import Any


class ErgodicLabError(Exception):
    """Base class of all domain errors."""


class DimensionMismatchError(ErgodicLabError, ValueError):
    """Raised when lattice vectors, weights or systems disagree on d."""

    def __init__(self, expected: int, actual: int, what: str = "vector"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class ArithmeticOverflowError(ErgodicLabError, OverflowError):
    """
    Raised when an exact integer leaves the signed 128-bit range.

    Attributes:
        operands (dict[str, Any]): The values that produced the overflow.
    """

    def __init__(self, message: str, **operands: Any):
        self.operands = operands
        details = ", ".join(f"{key}={value!r}" for key, value in operands.items())
        super().__init__(f"{message} ({details})" if details else message)


class NondegenerateFamilyRequired(ErgodicLabError):
    """Raised when a polynomial family has a constant column or a constant pair difference."""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(f"Family is degenerate: {'; '.join(report.failures())}")


class SizeGuardError(ErgodicLabError):
    """Raised when an exact enumeration would exceed its configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what} needs {size} entries, cap is {cap}")


class IncompatibleObservableError(ErgodicLabError, TypeError):
    """Raised when an observable is evaluated on a system it does not belong to."""


class HypothesisUnmetError(ErgodicLabError):
    """Raised when a check is requested outside the hypotheses that give it a target."""


class InsufficientCheckpointsError(ErgodicLabError):
    """Raised when a convergence report is asked for fewer than four checkpoints."""


class ZeroNormError(ErgodicLabError, ZeroDivisionError):
    """Raised when a ratio is normalised by a vanishing L^p norm."""


class ConfigError(ErgodicLabError):
    """
    Raised for semantic configuration errors found after schema validation.

    Attributes:
        field_path (str): Dotted path of the offending field.
    """

    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")
