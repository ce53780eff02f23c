"""
Exception types raised by pystein.
"""

from typing import Optional


class PysteinError(Exception):
    """Base class for all pystein errors."""


class ValidationError(PysteinError, ValueError):
    """An operator, channel or argument failed its invariant checks."""


class BudgetExceededError(PysteinError, ValueError):
    """A requested construction exceeds the configured dimension budget."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: size {size} exceeds budget {cap}")
        self.what = what
        self.size = size
        self.cap = cap


class UnsupportedRepresentationError(PysteinError, TypeError):
    """A free-set variant cannot be used in the requested program."""


class GroupClosureError(ValidationError):
    """A declared unitary list is not closed under composition."""


class PermutationClosureError(ValidationError):
    """A state set is not closed under permutations of its tensor factors."""


class ConfigError(PysteinError, ValueError):
    """An experiment configuration is malformed or references missing fixtures."""


class InequalityViolation(PysteinError, AssertionError):
    """A numerically audited inequality failed beyond its tolerance."""

    def __init__(
        self,
        inequality: str,
        lhs: float,
        rhs: float,
        fixture: Optional[str] = None,
    ):
        self.inequality = inequality
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        self.slack = self.rhs - self.lhs
        self.fixture = fixture
        message = f"{inequality}: lhs={self.lhs!r}, rhs={self.rhs!r}, slack={self.slack!r}"
        if fixture:
            message += f", fixture={fixture}"
        super().__init__(message)

    def with_fixture(self, fixture: str) -> "InequalityViolation":
        """Return a copy tagged with the fixture path that produced it."""
        return InequalityViolation(self.inequality, self.lhs, self.rhs, fixture)


def check_leq(
    inequality: str, lhs: float, rhs: float, slack: float, fixture: Optional[str] = None
) -> None:
    """Raise InequalityViolation unless lhs <= rhs + slack."""
    if not lhs <= rhs + slack:
        raise InequalityViolation(inequality, lhs, rhs, fixture)
