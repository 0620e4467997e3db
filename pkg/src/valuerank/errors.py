"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ValueRankError(Exception):
    """Base class for all package errors."""


class ValidationError(ValueRankError, ValueError):
    """An input violates a documented range, shape, or uniqueness rule.

    ``violations`` carries every problem found, not only the first one.
    """

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class StructuralError(ValidationError):
    """Dimension counts or shapes of two inputs disagree."""


class ConfigurationError(ValueRankError, ValueError):
    """Unknown variant, backend, or other bad configuration value."""


class UndefinedMetricError(ValueRankError, ValueError):
    """A metric was requested over an empty input."""


class ParseError(ValidationError):
    """A file could not be parsed at all (syntax level)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class AssessorError(ValueRankError):
    """Base class for score-source failures."""


class AssessorTransportError(AssessorError):
    """The remote assessor could not be reached after all retries."""

    def __init__(self, message: str, retries: int):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries


class AssessorProtocolError(AssessorError):
    """The remote assessor answered, but not with a usable response."""
