"""Exception types shared across the engine."""


class DomainError(ValueError):
    """A parameter is outside the domain where the model is defined."""


class ConvergenceError(RuntimeError):
    """The adaptive time stepper exhausted its step budget.

    The last difference between successive refinements is kept on
    ``residual`` so callers can decide whether to retry with a looser
    tolerance.
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class UnknownSequenceError(KeyError):
    """Requested catalog name does not exist."""


class ResourceLimitError(ValueError):
    """Requested work exceeds a configured cap."""
