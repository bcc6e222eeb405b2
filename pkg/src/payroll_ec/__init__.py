"""Temporal payroll rules: two evaluation engines, interval wages, and a
reference evaluator for the full functional event calculus."""

from .engine_changepoint import ChangepointTrace, run_changepoint
from .engine_single import run_single
from .errors import (AmbiguityError, CycleError, EvaluationError, InconsistencyError, NonStratifiableError,
                     ParseError, PayrollError, RangeError, UnknownNameError, ValidationError)
from .ingest import parse_document, parse_scenario, render_document, render_scenario
from .intervals import WageResult, eval_properties, segment, total_wage
from .model import (ActionDecl, ActionKind, FluentDecl, FluentKind, Ruleset, Scenario, validate_ruleset,
                    validate_scenario)
from .report import TraceReport, diff, run
from .temporal import Timeline, holds

__all__ = [
    "ActionDecl", "ActionKind", "AmbiguityError", "ChangepointTrace", "CycleError", "EvaluationError",
    "FluentDecl", "FluentKind", "InconsistencyError", "NonStratifiableError", "ParseError", "PayrollError",
    "RangeError", "Ruleset", "Scenario", "Timeline", "TraceReport", "UnknownNameError", "ValidationError",
    "WageResult", "diff", "eval_properties", "holds", "load_fixture", "parse_document", "parse_scenario",
    "render_document", "render_scenario", "run", "run_changepoint", "run_single", "segment", "total_wage",
    "validate_ruleset", "validate_scenario",
]


def load_fixture(name: str = "running_example.tables") -> str:
    """Text of a document shipped in ``payroll_ec/data``."""
    from importlib.resources import files

    return files(__name__).joinpath("data", name).read_text(encoding="utf-8")
