"""Exception hierarchy.

Errors fall into three families that the CLI maps to exit codes:
configuration problems (2), bad input data (3) and numerical/runtime
failures (4).
"""


class AssomError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 4


class ConfigError(AssomError, ValueError):
    exit_code = 2


class DataError(AssomError, ValueError):
    exit_code = 3


class RuntimeFailure(AssomError, RuntimeError):
    exit_code = 4


# --- linear algebra -------------------------------------------------------

class DimensionMismatch(DataError):
    pass


class DegenerateBasis(RuntimeFailure):
    """Raised when a set of vectors is (numerically) linearly dependent."""


# --- datasets -------------------------------------------------------------

class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedRows(ParseError):
    pass


class UnknownLabel(DataError):
    pass


class NotMinority(DataError):
    pass


class TooSmall(DataError):
    pass


class EmptyClass(DataError):
    pass


# --- sampling -------------------------------------------------------------

class InsufficientData(DataError):
    pass


class InsufficientVariance(DataError):
    pass


class TooFewMinority(DataError):
    pass


# --- evaluation -----------------------------------------------------------

class LengthMismatch(DataError):
    pass


class IncompleteGrid(RuntimeFailure):
    pass
