"""Exception hierarchy shared by the toolkit.

The CLI maps these onto exit codes: numerical failures exit with 3,
configuration/budget problems with 4.
"""


class EDCompanderError(Exception):
    """Base class for all toolkit errors."""


class DomainError(EDCompanderError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class PreconditionError(EDCompanderError, ValueError):
    """A documented precondition of an operation does not hold."""


class NumericalFailure(EDCompanderError, ArithmeticError):
    """An iterative numerical method did not reach its tolerance.

    ``estimate`` and ``error_bound`` carry the last available iterate.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class DivergenceError(NumericalFailure):
    """An integral that must be finite diverges (e.g. lambda vanishes where f > 0)."""


class InternalConsistencyError(NumericalFailure):
    """Two independent evaluation routes of the same quantity disagree."""


class UnimodalityError(NumericalFailure):
    """The objective is not unimodal on the search grid.

    ``grid`` holds the (c, value) pairs that failed the check.
    """

    def __init__(self, message, grid=None):
        super().__init__(message)
        self.grid = grid


class OutOfRegimeError(EDCompanderError, ValueError):
    """A bound is requested outside the range where it is stated."""


class ConfigurationError(EDCompanderError, ValueError):
    """A simulation configuration is invalid or exceeds the level budget."""


class InconclusiveError(EDCompanderError, RuntimeError):
    """Too few events were observed to support a statistical check."""


class BoundViolation(EDCompanderError, AssertionError):
    """A Monte Carlo estimate exceeds the analytic bound it must respect."""
