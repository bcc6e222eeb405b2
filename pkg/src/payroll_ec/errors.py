"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class PayrollError(Exception):
    """Base class for all errors raised by payroll_ec."""


class RangeError(PayrollError, ValueError):
    """A numeric component lies outside its permitted range."""


class UnknownNameError(PayrollError, KeyError):
    """A rule or formula refers to an identifier that is not declared."""

    def __init__(self, name: str, what: str = "identifier"):
        super().__init__(name)
        self.name = name
        self.what = what

    def __str__(self) -> str:
        return f"unknown {self.what} {self.name!r}"


class CycleError(PayrollError):
    """A dependency graph that must be acyclic contains a cycle."""

    def __init__(self, members):
        self.members = tuple(members)
        super().__init__("dependency cycle through " + ", ".join(self.members))


class ValidationError(PayrollError):
    """Raised when an engine is handed a ruleset that fails validation."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = len(self.violations) - 5
        if more > 0:
            lines += f"; ... ({more} more)"
        super().__init__(lines)


class InconsistencyError(PayrollError):
    """The rules admit no model at some timepoint (e.g. conflicting causes)."""

    def __init__(self, message: str, *, fluent: str | None = None,
                 tick: int | None = None, actions=(), constraint: str | None = None):
        super().__init__(message)
        self.fluent = fluent
        self.tick = tick
        self.actions = tuple(actions)
        self.constraint = constraint

    def key(self) -> tuple:
        """Comparable summary used when checking two engines for agreement."""
        return (type(self).__name__, self.fluent, self.tick, tuple(sorted(self.actions)))


class AmbiguityError(InconsistencyError):
    """Two applicable rules assign distinct values to one defined quantity."""


class EvaluationError(PayrollError):
    """An expression or comparison cannot be evaluated (e.g. ordering a symbol)."""


class NonStratifiableError(PayrollError):
    """A rule set has negation inside a recursive cycle."""

    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("not stratifiable; negative cycle through " + " -> ".join(self.cycle))


class ParseError(PayrollError):
    """Malformed table-document text.  ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")

    def shifted(self, line: int, column_offset: int) -> "ParseError":
        return ParseError(self.message, line, self.column + column_offset)
