"""Exception hierarchy shared by all modules."""


class DelayGameError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(DelayGameError):
    """Operands have incompatible or non-conforming shapes."""


class IntervalError(DelayGameError):
    """An integration interval [a, b] violates 0 <= a <= b."""


class SingularMatrixError(DelayGameError):
    """A linear solve hit a pivot too small to trust.

    The offending pivot magnitude is kept on the exception so callers can
    report how close to singular the system was.
    """

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = float(pivot)


class CouplingSingularityError(SingularMatrixError):
    """The simultaneous best-response system is singular at some step.

    Carries the backward-recursion step index and, when the failure is
    attributable to one controller, its 1-based index (else None).
    """

    def __init__(self, message, pivot, step, controller=None):
        super().__init__(message, pivot)
        self.step = int(step)
        self.controller = controller


class ValidationError(DelayGameError):
    """A domain invariant was violated; the message names the invariant."""


class DelayBoundError(ValidationError):
    """A delay falls outside [0, h)."""


class SchemaError(DelayGameError):
    """A configuration document is malformed; carries the field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
