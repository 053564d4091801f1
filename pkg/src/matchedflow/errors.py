"""Exception hierarchy.

Each category maps to one CLI exit code (see :mod:`matchedflow.cli`).
"""


class MatchedFlowError(Exception):
    """Base class for all package errors."""


class ConfigError(MatchedFlowError, ValueError):
    """Invalid configuration: bad parameter bound, unknown key, wrong type."""


class DataError(MatchedFlowError, ValueError):
    """Malformed or missing input data."""


class DomainError(MatchedFlowError, ValueError):
    """Argument outside the domain of a function.

    ``index`` carries the offending element position when applicable.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericError(MatchedFlowError, ArithmeticError):
    """Base class for numerical failures."""


class DegenerateError(NumericError):
    """Statistic undefined because an input has zero variance."""


class RankError(NumericError):
    """Design matrix is rank deficient."""


class InferenceError(NumericError):
    """Not enough usable observations to form a test statistic."""


class ConvergenceError(NumericError):
    """Iterative routine did not converge within its iteration cap."""

    def __init__(self, message, iterations=None, max_change=None):
        super().__init__(message)
        self.iterations = iterations
        self.max_change = max_change
