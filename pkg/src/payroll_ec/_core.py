"""Rules compiled into lookup tables shared by both engines."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import AmbiguityError, InconsistencyError, ValidationError
from .model import (AfterTrigger, FluentKind, Ruleset, Scenario, WhenTrigger, check_granularity,
                    evaluation_order, validate_ruleset, validate_scenario)
from .temporal import Atom, Exactly, Formula, evaluate

Value = Any


@dataclass
class TickState:
    """Every fluent's value at tick ``t`` plus the causes produced at ``t``.

    ``became[f]`` is the earliest tick since which ``f`` has had its current
    value; ``pending_causes`` are ``(fluent, value, action)`` triples that
    take effect at the next tick.
    """

    t: int
    values: dict
    became: dict
    pending_causes: frozenset = frozenset()
    actions: tuple = ()
    fired: tuple = ()

    def pending_values(self) -> dict:
        return {f: v for f, v, _ in self.pending_causes}


@dataclass
class RunTrace:
    timeline: Any
    happenings: list = field(default_factory=list)
    fired_triggers: list = field(default_factory=list)


def _differs(a, b) -> bool:
    return a != b or (type(a) is bool) != (type(b) is bool)


class Program:
    """A validated ruleset compiled for evaluation at granularity ``g``."""

    def __init__(self, rs: Ruleset, g: int = 1, mode: str = "single", sc: Scenario | None = None,
                 check: bool = True):
        if check:
            problems = list(validate_ruleset(rs, mode))
            if sc is not None:
                problems += list(validate_scenario(rs, sc))
            problems += check_granularity(rs, sc, g)
            if problems:
                raise ValidationError(problems)
        self.rs = rs
        self.g = g
        self.horizon = rs.horizon
        self.names = [f.name for f in rs.fluents]
        self.inertial = [f.name for f in rs.fluents if f.kind == FluentKind.INERTIAL]
        self.initial = {f.name: f.initial for f in rs.fluents if f.kind == FluentKind.INERTIAL}
        self.kinds = {f.name: f.kind for f in rs.fluents}
        self.order = evaluation_order(rs)
        self.defaults = {f.name: f.initial for f in rs.fluents if f.kind == FluentKind.DEFINED}
        self.counts = [f.name for f in rs.fluents if f.kind == FluentKind.COUNT]
        self.defined_rules: dict[str, list[tuple[Value, Formula]]] = defaultdict(list)
        for r in rs.defined_rules:
            self.defined_rules[r.fluent].append((r.value, r.condition))
        self.count_cond = {r.count_fluent: r.condition for r in rs.count_rules}
        self.effects: dict[str, list] = defaultdict(list)
        for e in rs.effects:
            self.effects[e.action].append((e.fluent, e.value, e.condition))
        self.after = [(tr, Exactly(tr.minutes, Atom(tr.fluent, tr.value)))
                      for tr in rs.triggers if isinstance(tr, AfterTrigger)]
        self.when = [tr for tr in rs.triggers if isinstance(tr, WhenTrigger)]
        self.walltime: dict[int, list[str]] = defaultdict(list)
        for a in rs.actions:
            for t in a.schedule:
                self.walltime[t].append(a.name)
        self.user: dict[int, list[str]] = defaultdict(list)
        if sc is not None:
            for a, t in sc.user_actions:
                self.user[t].append(a)
        self.triggered = frozenset(tr.action for tr in rs.triggers)

    def defined_value(self, name: str, values: Mapping, became: Mapping, t: int, history=None):
        chosen = _UNSET
        for value, cond in self.defined_rules.get(name, ()):
            if evaluate(cond, values, became, t, self.g, history):
                if chosen is _UNSET:
                    chosen = value
                elif _differs(chosen, value):
                    raise AmbiguityError(
                        f"defined fluent {name} has applicable rules for {chosen!r} and {value!r} at {t}",
                        fluent=name, tick=t, constraint="unique-rule")
        return self.defaults[name] if chosen is _UNSET else chosen

    def initial_state(self) -> TickState:
        values: dict = dict(self.initial)
        became = {n: 0 for n in self.names}
        for name in self.order:
            if self.kinds[name] == FluentKind.COUNT:
                values[name] = 0
            else:
                values[name] = self.defined_value(name, values, became, 0)
        return TickState(0, {n: values[n] for n in self.names}, became)

    def occurring(self, t: int, values: Mapping, became: Mapping, prev_counts: Mapping | None,
                  history=None) -> tuple[list[str], list[str]]:
        """Actions happening at ``t`` and the subset fired by triggers."""
        acts = set(self.user.get(t, ()))
        acts.update(self.walltime.get(t, ()))
        fired = set()
        for tr, phi in self.after:
            if evaluate(phi, values, became, t, self.g, history):
                fired.add(tr.action)
        if prev_counts is not None:
            for tr in self.when:
                if values[tr.count_fluent] >= tr.threshold > prev_counts[tr.count_fluent]:
                    fired.add(tr.action)
        acts |= fired
        return sorted(acts), sorted(fired)

    def causes(self, actions, values: Mapping, became: Mapping, t: int, history=None) -> frozenset:
        """Effective ``(fluent, value, action)`` causes of ``actions`` at ``t``."""
        found: dict[str, list[tuple[Value, str]]] = {}
        for a in actions:
            for fluent, value, cond in self.effects.get(a, ()):
                if cond is None or evaluate(cond, values, became, t, self.g, history):
                    found.setdefault(fluent, []).append((value, a))
        out = set()
        for fluent, items in found.items():
            first = items[0][0]
            if any(_differs(first, v) for v, _ in items[1:]):
                acts = sorted({a for _, a in items})
                vals = ", ".join(sorted({repr(v) for v, _ in items}))
                raise InconsistencyError(
                    f"conflicting values {vals} caused for {fluent} at {t} by {', '.join(acts)}",
                    fluent=fluent, tick=t, actions=acts, constraint="functional")
            out.update((fluent, v, a) for v, a in items)
        return frozenset(out)


class _Unset:
    pass


_UNSET = _Unset()
