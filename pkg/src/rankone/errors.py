"""Exception hierarchy shared by all rankone modules."""


class RankOneError(Exception):
    """Base class for every error raised by this package."""


# model
class EmptySpace(RankOneError, ValueError):
    pass


class NonPositiveWeight(RankOneError, ValueError):
    pass


class NonPositiveActivity(RankOneError, ValueError):
    pass


class DuplicateLabel(RankOneError, ValueError):
    pass


class TailTooHeavy(RankOneError, ValueError):
    pass


class TolOutOfRange(RankOneError, ValueError):
    pass


# theory
class ExponentOverflow(RankOneError, ArithmeticError):
    """An exponent exceeded the overflow guard; the caller should shrink its bracket."""


class NotSubcritical(RankOneError, ValueError):
    pass


class BracketNotFound(RankOneError, ArithmeticError):
    """No sign change was found inside the representable / summable domain.

    ``diagnostics`` carries the last bracket that was tried.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"


class OutOfRange(RankOneError, ValueError):
    pass


# branching
class UnknownRootLabel(RankOneError, KeyError):
    pass


# cli
class ConfigError(RankOneError, ValueError):
    """Base for configuration errors; ``key`` names the offending key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownKey(ConfigError):
    pass


class MissingRequired(ConfigError):
    pass


class TypeMismatch(ConfigError):
    pass
