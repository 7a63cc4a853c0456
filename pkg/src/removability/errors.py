"""Exception hierarchy shared by every module."""


class RemovabilityError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RemovabilityError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(RemovabilityError, ValueError):
    """A configuration parameter is invalid (sample counts, scale ranges...)."""


class PreconditionError(RemovabilityError):
    """An operation was called whose mathematical precondition fails."""


class RangeError(RemovabilityError, ValueError):
    """A value lies outside the representable range of an inverse function.

    ``interval`` holds the representable ``(low, high)`` pair.
    """

    def __init__(self, message, interval):
        super().__init__(f"{message}; representable interval is {interval}")
        self.interval = interval


class NumericError(RemovabilityError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ScaleError(RemovabilityError, ValueError):
    """A requested scale is too fine for the geometry or grid budget."""


class PrecisionError(RemovabilityError):
    """Monte Carlo error bars are too wide for the requested estimate."""
