"""Exception types raised across the package."""


class SyncError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SyncError, ValueError):
    pass


class BoundsError(SyncError, IndexError):
    pass


class DivergenceError(SyncError, ArithmeticError):
    """The timing loop drove the counter step to a non-positive value."""


class SingularFitError(SyncError, ArithmeticError):
    pass


class InsufficientDataError(SyncError, ValueError):
    pass


class ImplausibleSkewError(SyncError, ValueError):
    pass


class TopologyError(SyncError, ValueError):
    pass


class ConfigError(SyncError, ValueError):
    """Bad scenario configuration; ``key`` names the offending field."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key
