"""Exception hierarchy shared by all ehsched modules."""


class EhschedError(Exception):
    """Base class for all ehsched errors."""


class BadInput(EhschedError):
    """An argument violates a documented precondition."""


class Unachievable(EhschedError):
    """The requested bits cannot be delivered with the available energy/time."""


class NoRoot(EhschedError):
    """A scalar equation had no root inside its bracket; preconditions violated."""


class EmptyProfile(EhschedError):
    """A harvest profile with no arrivals where at least one is required."""


class BadModel(EhschedError):
    """A slotted finite-battery model is internally inconsistent."""


class InternalInvariantViolation(EhschedError):
    """A property guaranteed by the algorithm failed; signals a numerical fault."""
