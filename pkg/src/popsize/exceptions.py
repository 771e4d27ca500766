"""Exception hierarchy.

Every error carries a short ``reason`` token alongside the human message so
the command line front end can emit a one-line machine readable diagnostic.
The class also determines the CLI exit code (usage 2, data 3, numerical 4).
"""


class PopsizeError(Exception):
    exit_code = 1

    def __init__(self, message, reason=None):
        super().__init__(message)
        self.reason = reason or type(self).__name__


class UsageError(PopsizeError, ValueError):
    """Invalid combination of arguments or non-nested model comparison."""

    exit_code = 2


class DataValidationError(PopsizeError, ValueError):
    """Input data violates its declared format (bad counts, unknown levels)."""

    exit_code = 3

    def __init__(self, message, reason=None, line=None):
        super().__init__(message, reason)
        self.line = line


class SchemaError(DataValidationError):
    """A required column is missing or the header is malformed."""


class NumericalError(PopsizeError):
    exit_code = 4


class DomainError(NumericalError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DegenerateDataError(NumericalError):
    """The data cannot support the requested estimator (e.g. no doubletons)."""


class ConvergenceError(NumericalError):
    """Iterative solver hit its iteration cap.

    The last iterate is kept on ``last_iterate`` for inspection.
    """

    def __init__(self, message, reason=None, last_iterate=None):
        super().__init__(message, reason)
        self.last_iterate = last_iterate


class SingularDesignError(NumericalError):
    """Design matrix is not of full column rank."""


class SeparationError(NumericalError):
    """Complete or quasi-complete separation: the logistic MLE diverges."""
