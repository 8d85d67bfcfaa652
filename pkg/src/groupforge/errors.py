"""Exception hierarchy shared by every groupforge module."""

from __future__ import annotations


class GroupForgeError(Exception):
    """Base class for all library errors."""


class ConfigurationError(GroupForgeError, ValueError):
    """Invalid algorithm parameters (k, number of groups, weights, ...)."""


class InvalidGroupError(GroupForgeError, ValueError):
    pass


class InvalidPartitionError(GroupForgeError, ValueError):
    pass


class InvalidMoveError(GroupForgeError, ValueError):
    pass


class NotFoundError(GroupForgeError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class DegenerateInputError(GroupForgeError, ValueError):
    pass


class BudgetExceededError(GroupForgeError):
    """The exact search ran out of its node or time budget.

    ``best`` holds the best outcome found before the budget ran out (or
    ``None`` when no complete partition was scored).
    """

    def __init__(self, message: str, best=None, explored: int = 0):
        super().__init__(message)
        self.best = best
        self.explored = explored


class ParseError(GroupForgeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateRatingError(ParseError):
    pass


class RatingRangeError(ParseError):
    pass


class CompletenessError(GroupForgeError, ValueError):
    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = list(missing)
