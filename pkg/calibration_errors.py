"""
Exception hierarchy for the hand-eye calibration toolkit.
Library code raises these; only the CLI maps them to exit codes.
"""

from typing import Optional


class CalibrationError(Exception):
    """Root of every error raised by the toolkit"""


class InvariantViolation(CalibrationError, ValueError):
    """A value type or data record violates its invariants"""


class DimensionMismatch(CalibrationError, ValueError):
    """Matrix or vector dimensions are inconsistent"""


class UnsupportedRepresentation(CalibrationError, ValueError):
    """The requested rotation representation has no such mapping"""


class InfeasibleSolver(CalibrationError, ValueError):
    """Problem/representation/form combination is not a known solver"""


class InsufficientMeasurements(CalibrationError):
    """Fewer measurements than the solver's unknowns require"""


class DegenerateMotion(CalibrationError):
    """Measurement set is rank deficient (e.g. rotations share one axis)"""


class NullspaceAnomaly(CalibrationError):
    """Null space of a homogeneous system does not have the expected structure"""


class NoRealRoot(NullspaceAnomaly):
    """The null-space combination quadratic has only complex roots"""


class SingularInput(CalibrationError):
    """Matrix too close to singular to project onto SO(3)"""


class MissingEstimate(CalibrationError):
    """An error metric needs an estimate the solver did not produce"""


class UsageError(CalibrationError):
    """Invalid command-line usage"""


class ParseError(CalibrationError):
    """
    Malformed dataset file.

    Args:
        message: What went wrong
        line: 1-based line of the offending token, when known
        column: 1-based column of the offending token, when known
        field: JSON path of the offending field, when known
    """

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.column = column
        self.field = field
        context = []
        if line is not None:
            context.append(f"line {line}")
        if column is not None:
            context.append(f"column {column}")
        if field:
            context.append(f"field {field}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class OutputError(CalibrationError):
    """A result, dataset or table file could not be written"""
