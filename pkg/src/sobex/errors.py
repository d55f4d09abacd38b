"""Exception hierarchy shared by all sobex modules."""


class SobexError(Exception):
    """Base class for every error raised by sobex."""


class ValidationError(SobexError, ValueError):
    """Input rejected before any computation started."""


class InvalidParams(ValidationError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ResolutionTooCoarse(ValidationError):
    pass


class DomainError(ValidationError):
    """Argument outside the domain of a closed-form expression."""


class BadExponent(ValidationError):
    pass


class BadNode(ValidationError):
    pass


class NoConvergence(SobexError):
    """An iterative solver hit its iteration cap.

    The partial result (a report object) is kept on ``report`` so callers
    can inspect the trace.
    """

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
