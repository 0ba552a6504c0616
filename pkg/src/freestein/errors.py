"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: inadmissible problem -> 2,
invalid state -> 3, moment budget exceeded -> 4, anything else -> 1.
"""


class FreesteinError(Exception):
    """Base class for all library errors."""


class ParseError(FreesteinError):
    """Malformed input file or JSON object.

    ``field`` names the offending key path when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvalidStateError(FreesteinError):
    """A moment functional violates a state invariant (unit moment,
    Hermitian symmetry, positivity, traciality, PSD Gram)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = tuple(violations or ())


class InadmissibleProblemError(FreesteinError):
    """A problem hypothesis fails, e.g. the centering defect of a Stein
    problem exceeds tolerance, or a normalization hypothesis is violated."""


class BudgetExceededError(FreesteinError):
    """A computation needs word moments beyond the backend's max order."""

    def __init__(self, message, needed=None, available=None):
        super().__init__(message)
        self.needed = needed
        self.available = available


class ConsistencyError(FreesteinError):
    """Two independent evaluation routes disagreed beyond tolerance.

    This signals either an invalid input state or a numerical breakdown;
    it is never raised for valid states within the supported budgets.
    """
