"""Exception types shared across the package."""


class CollapseError(Exception):
    """Base class for all package errors."""


class DomainError(CollapseError, ValueError):
    """An argument lies outside the domain of the operation."""


class TimeRangeError(DomainError):
    """A time lies outside the admissible window of a solution."""


class ConfigError(CollapseError, ValueError):
    """An invalid run configuration."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericError(CollapseError, ArithmeticError):
    """Non-finite values or a failed numerical procedure."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
