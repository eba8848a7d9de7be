"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Operation received a value outside its documented domain."""


class InvalidConfigError(ValueError):
    """A configuration object violates its invariants."""


class DivergenceError(RuntimeError):
    """A simulation produced a non-finite state.

    Attributes:
        state: the offending state vector (may be None).
        context: short description of where the divergence happened.
    """

    def __init__(self, message, state=None, context=""):
        super().__init__(message)
        self.state = state
        self.context = context


class UnobservableConfigError(RuntimeError):
    """Observability Gramian is singular for a sensor configuration."""


class RiccatiConvergenceError(RuntimeError):
    """Riccati fixed-point iteration failed to meet its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InstabilityError(RuntimeError):
    """Closed-loop system is not asymptotically stable."""


class NumericError(RuntimeError):
    """A network computation produced non-finite values."""


class DatasetFormatError(ValueError):
    """Dataset file cannot be parsed.

    Attributes:
        line: 1-based line number of the offending row (may be None).
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ModelFormatError(ValueError):
    """Model file is malformed or its arrays have unexpected shapes."""
