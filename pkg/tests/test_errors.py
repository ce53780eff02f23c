"""Tests for errors module."""

import pytest

from pystein.errors import (
    BudgetExceededError,
    ConfigError,
    GroupClosureError,
    InequalityViolation,
    PysteinError,
    UnsupportedRepresentationError,
    ValidationError,
    check_leq,
)


def test_hierarchy():
    assert issubclass(ValidationError, ValueError)
    assert issubclass(ConfigError, PysteinError)
    assert issubclass(GroupClosureError, ValidationError)
    assert issubclass(UnsupportedRepresentationError, TypeError)
    assert issubclass(InequalityViolation, AssertionError)


def test_budget_error_fields():
    e = BudgetExceededError("dimension", 8192, 4096)
    assert (e.what, e.size, e.cap) == ("dimension", 8192, 4096)


def test_check_leq_within_slack():
    check_leq("a <= b", 1.0, 1.0, 0.0)
    check_leq("a <= b", 1.0 + 1e-9, 1.0, 1e-8)


def test_check_leq_violation():
    with pytest.raises(InequalityViolation) as exc:
        check_leq("a <= b", 2.0, 1.5, 1e-6)
    e = exc.value
    assert e.inequality == "a <= b"
    assert e.slack == pytest.approx(-0.5)
    assert e.fixture is None
    tagged = e.with_fixture("fixtures/demo.json")
    assert tagged.fixture == "fixtures/demo.json"
    assert tagged.lhs == 2.0
