"""Exception hierarchy shared by all modules."""


class FellerError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(FellerError, ValueError):
    pass


class InvalidTime(FellerError, ValueError):
    pass


class SignConstraintError(FellerError, ValueError):
    """Scaling weights do not contain both a contracting and an expanding direction."""


class UnequalMass(FellerError, ValueError):
    pass


class NotALimitPoint(FellerError, ValueError):
    """No candidate other than y lies in the requested ball."""


class ConfigError(FellerError):
    """Invalid run configuration. ``path`` is a JSON pointer into the document."""

    def __init__(self, message, path=""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path
        self.message = message


class DataError(FellerError):
    """Input data is well formed but unusable (e.g. measures of different mass)."""
