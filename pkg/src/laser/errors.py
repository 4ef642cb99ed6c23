"""Exception hierarchy shared by every laser module."""


class LaserError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LaserError):
    """A file could not be parsed or is structurally malformed."""


class ValidationError(LaserError):
    """A domain invariant is violated; ``field`` names the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class CapabilityError(ValidationError):
    """A task has no capable actor."""


class SpecError(LaserError):
    """Invalid generator parameters."""


class GridError(LaserError):
    """A footprint falls outside the voxel grid."""


class ScheduleReferenceError(LaserError):
    """A schedule references task or actor ids unknown to the instance."""


class IterationLimit(LaserError):
    """The bottom-session split loop did not converge."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or []


class InsertionError(LaserError):
    """A deferred task could not be inserted anywhere."""
