"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""


class PssError(Exception):
    exit_code = 1


class InvalidInputError(PssError, ValueError):
    """Malformed or out-of-contract input (bad shapes, too few rows, parse failures)."""

    exit_code = 2


class ParseError(InvalidInputError):
    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.column = column


class OutOfRangeError(InvalidInputError):
    """A query point lies outside the bounding box of the fitted grid."""


class DegenerateDataError(PssError, ValueError):
    """Data too degenerate for the estimator (constant samples, zero distances, singular covariance)."""

    exit_code = 3


class ConfigError(PssError, ValueError):
    """Invalid estimator or benchmark configuration."""

    exit_code = 4


class InvalidLabelsError(InvalidInputError):
    pass


class SelectionError(PssError, ValueError):
    """No feasible candidate during cross-validated selection."""

    exit_code = 3
