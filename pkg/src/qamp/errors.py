"""Exception hierarchy shared by all modules."""


class QampError(Exception):
    """Base class for library errors."""


class InvalidDimensionError(QampError, ValueError):
    pass


class InvalidTransitionError(QampError, ValueError):
    pass


class LayoutMismatchError(QampError, ValueError):
    pass


class TruncationError(QampError, ValueError):
    """Raised when a truncated field state discards more mass than allowed."""

    def __init__(self, message, tail_mass):
        super().__init__(message)
        self.tail_mass = tail_mass


class NotAStateError(QampError, ValueError):
    pass


class UnsupportedConfigurationError(QampError, ValueError):
    pass


class IntegratorAbort(QampError, RuntimeError):
    """Evolution stopped because a health check failed.

    ``time`` is in internal units (1/lambda); ``metric`` names the check
    that tripped and ``value`` is its offending value.
    """

    def __init__(self, message, time, metric, value):
        super().__init__(message)
        self.time = time
        self.metric = metric
        self.value = value


class DegenerateSteadyStateError(QampError, RuntimeError):
    pass


class GridMismatchError(QampError, ValueError):
    pass


class ConfigError(QampError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
