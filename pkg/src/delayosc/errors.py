"""Exception hierarchy shared by every module."""


class DelayOscError(Exception):
    """Base class for all library errors."""


class ValidationError(DelayOscError, ValueError):
    """A piecewise function or equation violates a structural invariant."""


class OutOfDomain(DelayOscError, ValueError):
    pass


class Unbounded(ValidationError):
    """The delay representation cannot guarantee tau(t) -> infinity."""


class DomainError(DelayOscError, ValueError):
    pass


class HypothesisViolated(DelayOscError):
    pass


class HistoryTooShort(DelayOscError, ValueError):
    pass


class StepInvalid(DelayOscError, ValueError):
    pass


class NonFiniteValue(DelayOscError, ArithmeticError):
    pass


class TooFewZeros(DelayOscError):
    pass


class WindowTooShort(DelayOscError, ValueError):
    pass


class InconsistentFeatures(DelayOscError, ValueError):
    pass


class ParseError(DelayOscError, ValueError):
    pass
