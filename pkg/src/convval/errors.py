"""Exception hierarchy shared by all modules."""


class ConvvalError(Exception):
    """Base class for errors raised by convval."""


class EvaluationError(ConvvalError, ArithmeticError):
    """A density or function produced a non-finite value."""

    def __init__(self, message, at=None):
        super().__init__(message)
        self.at = at


class DomainError(ConvvalError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(ConvvalError, ValueError):
    """An input does not satisfy a documented precondition."""


class NonDifferentiableError(ConvvalError, ValueError):
    """Derivatives were requested at a point where they do not exist."""

    def __init__(self, message, variant=None, at=None):
        super().__init__(message)
        self.variant = variant
        self.at = at


class ConvergenceError(ConvvalError, RuntimeError):
    """An inner numerical solver did not converge."""

    def __init__(self, message, at=None):
        super().__init__(message)
        self.at = at
