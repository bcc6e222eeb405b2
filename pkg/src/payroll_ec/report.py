"""Run pipeline (engine, intervals, wage) and engine comparison."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Any

from ._core import _differs
from .engine_changepoint import ChangepointRun
from .engine_single import SingleRun
from .errors import PayrollError
from .ingest import render_value
from .intervals import Interval, WageResult, eval_properties, segment, total_wage
from .model import Ruleset, Scenario


@dataclass
class TraceReport:
    engine: str
    granularity: int
    horizon: int
    happenings: list[tuple[str, int]]
    fired_triggers: list[tuple[str, int]]
    intervals: list[Interval]
    properties: list[dict]
    wage: WageResult
    steps: int
    changepoints: list[int] | None = None
    wall_ms: float = 0.0
    timeline: Any = field(default=None, repr=False)

    @property
    def total(self) -> Decimal:
        return self.wage.total

    def to_dict(self, timing: bool = True) -> dict:
        """JSON-ready dict with a fixed key order."""
        ivs = []
        for iv, props, line in zip(self.intervals, self.properties, self.wage.lines):
            ivs.append({
                "id": iv.id,
                "from": iv.start,
                "to": iv.end,
                "length": iv.length_minutes,
                "values": {k: _json(v) for k, v in iv.relevant_values.items()},
                "properties": {k: _json(v) for k, v in props.items()},
                "rate": _json(line.rate),
                "wage": _json(line.amount),
            })
        out = {
            "engine": self.engine,
            "granularity": self.granularity,
            "horizon": self.horizon,
            "happenings": [[a, t] for a, t in self.happenings],
            "fired_triggers": [[a, t] for a, t in self.fired_triggers],
            "changepoints": self.changepoints,
            "steps": self.steps,
            "intervals": ivs,
            "total_wage": str(self.wage.total),
            "total_wage_exact": _json(self.wage.exact),
        }
        if timing:
            out["wall_ms"] = round(self.wall_ms, 3)
        return out


def _json(v):
    if isinstance(v, Fraction):
        return render_value(int(v) if v.denominator == 1 else v)
    return v


def run(rs: Ruleset, sc: Scenario, mode: str = "single", g: int = 1, fault=None) -> TraceReport:
    """Evaluate a scenario end to end with the chosen engine."""
    start = time.perf_counter()
    if mode == "single":
        runner = SingleRun(rs, sc, g)
        trace = runner.run()
        steps, cps = runner.steps, None
    elif mode == "changepoint":
        runner = ChangepointRun(rs, sc, g, fault=fault)
        trace, cp = runner.run()
        steps, cps = cp.advance_count, cp.changepoints
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ivs = segment(trace.timeline, rs.relevant)
    props = eval_properties(ivs, rs.property_decls, rs.property_rules)
    wage = total_wage(ivs, props, rs.wage_property)
    wall = (time.perf_counter() - start) * 1000
    return TraceReport(mode, g, rs.horizon, trace.happenings, trace.fired_triggers, ivs, props, wage,
                       steps, cps, wall, trace.timeline)


@dataclass
class DiffResult:
    equivalent: bool
    detail: str
    minute: int | None = None

    def __str__(self) -> str:
        return "equivalent" if self.equivalent else f"divergence: {self.detail}"


def _outcome(rs, sc, mode, g, fault=None):
    try:
        return run(rs, sc, mode, g, fault), None
    except PayrollError as exc:
        if hasattr(exc, "key"):
            return None, exc
        raise


def diff(rs: Ruleset, sc: Scenario, g: int = 1, fault=None) -> DiffResult:
    """Run both engines and report the first divergence, if any."""
    a, ea = _outcome(rs, sc, "single", g)
    b, eb = _outcome(rs, sc, "changepoint", g, fault)
    if ea or eb:
        if ea and eb and ea.key() == eb.key():
            return DiffResult(True, f"both engines report: {ea}")
        return DiffResult(False, f"single: {ea or 'ok'}; changepoint: {eb or 'ok'}",
                          getattr(ea or eb, "tick", None))
    return compare_reports(a, b)


def _per_minute(tl):
    if hasattr(tl, "to_dense"):
        tl = tl.to_dense()
    return tl.to_minutes()


def compare_reports(a: TraceReport, b: TraceReport) -> DiffResult:
    ta, tb = _per_minute(a.timeline), _per_minute(b.timeline)
    first: tuple[int, str] | None = None
    for f in ta.fluents:
        sa, sb = ta.series[f], tb.series.get(f)
        if sb is None:
            return DiffResult(False, f"fluent {f} missing from the second trace")
        m = next((i for i, (x, y) in enumerate(zip(sa, sb)) if _differs(x, y)), None)
        if m is None and len(sa) != len(sb):
            m = min(len(sa), len(sb))
        if m is not None and (first is None or m < first[0]):
            x = sa[m] if m < len(sa) else None
            y = sb[m] if m < len(sb) else None
            first = (m, f"{f} at minute {m}: {x!r} vs {y!r}")
    if first is not None:
        return DiffResult(False, first[1], first[0])
    if a.happenings != b.happenings:
        m = next((x[1] for x, y in zip(a.happenings, b.happenings) if x != y),
                 min(len(a.happenings), len(b.happenings)))
        return DiffResult(False, f"happenings differ near minute {m}", m)
    ia = [(iv.start, iv.end, iv.relevant_values) for iv in a.intervals]
    ib = [(iv.start, iv.end, iv.relevant_values) for iv in b.intervals]
    if ia != ib:
        return DiffResult(False, "intervals differ")
    if a.properties != b.properties:
        return DiffResult(False, "interval properties differ")
    if a.wage.exact != b.wage.exact:
        return DiffResult(False, f"totals differ: {a.wage.exact} vs {b.wage.exact}")
    return DiffResult(True, "equivalent")
