"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericalFailureError(RuntimeError):
    """Raised when an iterative numerical routine fails to converge."""


class WeightFormatError(ValueError):
    """Raised on malformed generator weight files.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivergenceError(RuntimeError):
    """Raised when a solver produces non-finite values.

    The trace accumulated up to the failure is attached for post-mortems.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
