"""
domaindiv.errors defines the exception hierarchy shared by every stage of the
pipeline. The three top-level families map to the CLI exit codes.
"""
from typing import Any, Optional


class DomainDivisionError(Exception):
    """
    Base class of every error raised by domaindiv.
    """
    exit_code: int = 1
    stage: Optional[str] = None


class ConfigError(DomainDivisionError):
    """
    This exception is raised when a configuration is invalid.
    """
    exit_code = 2


class DataError(DomainDivisionError):
    """
    This exception is raised when input data violates the expected format or invariants.
    """
    exit_code = 3


class NumericalError(DomainDivisionError):
    """
    This exception is raised when a numerical procedure fails.
    """
    exit_code = 4


class ParseError(DataError):

    def __init__(self, path: str, line: int, message: str):
        super(ParseError, self).__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class DimensionMismatchError(DataError):
    pass


class UnknownLabelError(DataError):
    pass


class DuplicateClassError(DataError):
    pass


class MissingPrototypeError(DataError):
    pass


class CoverageError(DataError):
    pass


class EmptyClassError(DataError):
    pass


class EmptySampleError(DataError):
    pass


class InsufficientSamplesError(DataError):
    pass


class DegenerateClassError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class NonConvergenceError(NumericalError):

    def __init__(self, message: str, iterations: int, last_iterate: Any = None):
        super(NonConvergenceError, self).__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations
        self.last_iterate = last_iterate


class DegenerateSampleError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class BudgetExhaustedError(NumericalError):
    pass


class UnfittedModelError(DataError):
    pass
