"""Exception hierarchy shared by the services and the command line.

Each exception knows the process exit code it maps to; predicates that are
merely false never raise.
"""
from typing import List, TYPE_CHECKING

if TYPE_CHECKING:
    from models import Violation


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 2


class UsageError(ToolkitError):
    """Bad command-line usage or unreadable input."""


class MarketValidationError(ToolkitError):
    """A market document broke one or more validity rules."""

    def __init__(self, violations: List["Violation"]):
        self.violations = list(violations)
        summary = "; ".join(f"{v.code}: {v.message}" for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"Invalid market document: {summary}{more}")


class UnknownAgentError(ToolkitError):
    """An agent token that is not part of the market."""

    def __init__(self, agent: str):
        self.agent = agent
        super().__init__(f"Unknown agent: {agent!r}")


class PreconditionViolated(ToolkitError):
    """An operation was called on inputs outside its domain."""


class MalformedWitnessError(PreconditionViolated):
    """A unidirectional witness does not describe a constructible pattern."""


class CannotOccurError(ToolkitError):
    """The cyclic overlapping-pairs pattern, which no minimal sub-preference produces."""


class GuardExceeded(ToolkitError):
    """An instance is larger than the configured guard allows."""

    exit_code = 3

    def __init__(self, guard: str, limit: int, actual: int):
        self.guard = guard
        self.limit = limit
        self.actual = actual
        super().__init__(f"Guard '{guard}' exceeded: size {actual} > limit {limit}")


def check_guard(guard: str, limit: int, actual: int) -> None:
    """Raise ``GuardExceeded`` when ``actual`` is above ``limit``."""
    if actual > limit:
        raise GuardExceeded(guard, limit, actual)
