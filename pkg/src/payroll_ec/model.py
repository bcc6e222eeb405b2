"""Declarative payroll model: fluents, actions, rules, scenarios, validation."""

from __future__ import annotations

import dataclasses
import graphlib
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Union

from ._graph import cyclic_components
from .errors import CycleError, RangeError, UnknownNameError
from .intervals import PropertyDecl, PropertyRule, expr_properties, formula_props
from .temporal import AtLeast, Atom, Exactly, Formula, atoms_of, durations_of, fluents_of, has_duration

Value = Any
DEFAULT_HORIZON = 2880
IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
RESERVED = frozenset({"and", "not", "since", "true", "false", "length", "this", "next", "prev", "bool"})


def stamp_from_dhm(days: int, hours: int, minutes: int) -> int:
    """Minutes since scenario start for day ``days`` at ``hours:minutes``."""
    if days < 0 or not 0 <= hours <= 23 or not 0 <= minutes <= 59:
        raise RangeError(f"invalid day/hour/minute ({days}, {hours}, {minutes})")
    return (days * 24 + hours) * 60 + minutes


def dhm_from_stamp(t: int) -> tuple[int, int, int]:
    if t < 0:
        raise RangeError(f"negative timepoint {t}")
    days, rest = divmod(t, 1440)
    return days, rest // 60, rest % 60


def value_kind(v: Value) -> str:
    """Coarse type tag; keeps ``True`` and ``1`` apart when checking domains."""
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, Fraction)):
        return "number"
    if isinstance(v, str):
        return "symbol"
    raise TypeError(f"unsupported value {v!r}")


def in_domain(v: Value, domain: Iterable[Value]) -> bool:
    k = value_kind(v)
    return any(value_kind(d) == k and d == v for d in domain)


def normalize_value(v: Value) -> Value:
    """Integral rationals collapse to ``int``."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v.numerator)
    return v


class FluentKind(str, Enum):
    INERTIAL = "inertial"
    DEFINED = "defined"
    COUNT = "count"


class ActionKind(str, Enum):
    USER = "user"
    WALLTIME = "walltime"
    TRIGGERED = "triggered"


@dataclass(frozen=True)
class FluentDecl:
    """A fluent.  ``initial`` is the initial value (inertial) or default (defined);
    count fluents have an empty domain (nonnegative minutes) and start at 0."""

    name: str
    kind: FluentKind
    domain: tuple = ()
    initial: Value = 0
    relevant: bool = False


@dataclass(frozen=True)
class ActionDecl:
    name: str
    kind: ActionKind
    schedule: tuple[int, ...] = ()


@dataclass(frozen=True)
class EffectRule:
    action: str
    fluent: str
    value: Value
    condition: Formula | None = None


@dataclass(frozen=True)
class AfterTrigger:
    """Fire ``action`` once ``fluent`` has carried ``value`` for exactly ``minutes``."""

    fluent: str
    value: Value
    minutes: int
    action: str


@dataclass(frozen=True)
class WhenTrigger:
    """Fire ``action`` when the count fluent first reaches ``threshold`` minutes."""

    count_fluent: str
    threshold: int
    action: str


TriggerRule = Union[AfterTrigger, WhenTrigger]


@dataclass(frozen=True)
class DefinedRule:
    fluent: str
    value: Value
    condition: Formula


@dataclass(frozen=True)
class CountRule:
    count_fluent: str
    condition: Formula


@dataclass(frozen=True)
class Ruleset:
    fluents: tuple[FluentDecl, ...] = ()
    actions: tuple[ActionDecl, ...] = ()
    effects: tuple[EffectRule, ...] = ()
    triggers: tuple[TriggerRule, ...] = ()
    defined_rules: tuple[DefinedRule, ...] = ()
    count_rules: tuple[CountRule, ...] = ()
    property_decls: tuple[PropertyDecl, ...] = ()
    property_rules: tuple[PropertyRule, ...] = ()
    horizon: int = DEFAULT_HORIZON
    wage_property: str = "totalWage"

    @cached_property
    def fluent_map(self) -> dict[str, FluentDecl]:
        return {f.name: f for f in self.fluents}

    @cached_property
    def action_map(self) -> dict[str, ActionDecl]:
        return {a.name: a for a in self.actions}

    def fluent(self, name: str) -> FluentDecl:
        try:
            return self.fluent_map[name]
        except KeyError:
            raise UnknownNameError(name, "fluent") from None

    def action(self, name: str) -> ActionDecl:
        try:
            return self.action_map[name]
        except KeyError:
            raise UnknownNameError(name, "action") from None

    def fluents_of_kind(self, kind: FluentKind) -> list[FluentDecl]:
        return [f for f in self.fluents if f.kind == kind]

    @property
    def relevant(self) -> list[str]:
        return [f.name for f in self.fluents if f.relevant]

    def replace(self, **changes) -> "Ruleset":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Scenario:
    """User actions as ``(action, minute)`` pairs, kept sorted by time then name."""

    user_actions: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "user_actions",
                           tuple(sorted(((a, int(t)) for a, t in self.user_actions),
                                        key=lambda p: (p[1], p[0]))))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subjects: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, *subjects: str) -> None:
        self.violations.append(Violation(code, message, tuple(subjects)))

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def derived_dependencies(rs: Ruleset) -> dict[str, list[str]]:
    """Derived fluent -> derived fluents its rule conditions mention."""
    derived = {f.name for f in rs.fluents if f.kind != FluentKind.INERTIAL}
    deps: dict[str, list[str]] = {name: [] for name in derived}
    conds = [(r.fluent, r.condition) for r in rs.defined_rules]
    conds += [(r.count_fluent, r.condition) for r in rs.count_rules]
    for head, cond in conds:
        if head not in deps:
            continue
        for f in sorted(fluents_of(cond)):
            if f in derived and f not in deps[head]:
                deps[head].append(f)
    return deps


def _topo(names: list[str], deps: dict[str, list[str]]) -> list[str]:
    sorter = graphlib.TopologicalSorter()
    for n in names:
        sorter.add(n, *[d for d in deps.get(n, ()) if d in deps])
    try:
        return list(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CycleError(sorted(set(exc.args[1]))) from None


def evaluation_order(rs: Ruleset) -> list[str]:
    """Defined and count fluents, each after every derived fluent it depends on."""
    deps = derived_dependencies(rs)
    return _topo([f.name for f in rs.fluents if f.name in deps], deps)


def dependency_order(rs: Ruleset) -> list[str]:
    """Defined fluents in an order where dependencies come first."""
    deps = derived_dependencies(rs)
    defined = [f.name for f in rs.fluents if f.kind == FluentKind.DEFINED]
    sub = {n: [d for d in deps[n] if d in deps and rs.fluent_map[d].kind == FluentKind.DEFINED]
           for n in defined}
    return _topo(defined, sub)


def _check_formula(rs: Ruleset, phi: Formula, where: str, rep: ValidationReport) -> None:
    for atom in atoms_of(phi):
        decl = rs.fluent_map.get(atom.fluent)
        if decl is None:
            rep.add("reference", f"{where}: unknown fluent {atom.fluent!r}", atom.fluent)
        elif decl.kind == FluentKind.COUNT:
            v = atom.value
            if value_kind(v) != "number" or v < 0 or Fraction(v).denominator != 1:
                rep.add("domain", f"{where}: count value {v!r} is not a minute count", atom.fluent)
        elif not in_domain(atom.value, decl.domain):
            rep.add("domain", f"{where}: {atom.value!r} not in domain of {atom.fluent}", atom.fluent)
    for d in durations_of(phi):
        if not isinstance(d, int) or isinstance(d, bool) or d <= 0:
            rep.add("duration", f"{where}: duration {d!r} must be a positive integer")


def _walk_durations(phi: Formula):
    if isinstance(phi, (AtLeast, Exactly)):
        yield phi
    if hasattr(phi, "parts"):
        for p in phi.parts:
            yield from _walk_durations(p)
    elif hasattr(phi, "sub"):
        yield from _walk_durations(phi.sub)


def validate_ruleset(rs: Ruleset, mode: str = "single") -> ValidationReport:
    """Static checks.  ``mode`` is ``"single"`` or ``"changepoint"``."""
    if mode not in ("single", "changepoint"):
        raise ValueError(f"unknown mode {mode!r}")
    rep = ValidationReport()

    if not isinstance(rs.horizon, int) or rs.horizon <= 0:
        rep.add("horizon", f"horizon must be a positive integer, got {rs.horizon!r}")

    seen: set[str] = set()
    names = [f.name for f in rs.fluents] + [a.name for a in rs.actions]
    for name in names:
        if not isinstance(name, str) or not IDENT.match(name) or name in RESERVED:
            rep.add("name", f"invalid identifier {name!r}", str(name))
        if name in seen:
            rep.add("duplicate", f"{name!r} declared more than once", name)
        seen.add(name)

    for f in rs.fluents:
        if f.kind == FluentKind.COUNT:
            if f.domain or f.initial != 0 or value_kind(f.initial) != "number":
                rep.add("domain", f"count fluent {f.name} must have no domain and start at 0", f.name)
            if f.relevant:
                rep.add("relevant", f"count fluent {f.name} cannot be relevant", f.name)
            continue
        if not f.domain:
            rep.add("domain", f"fluent {f.name} has an empty domain", f.name)
            continue
        kinds = {value_kind(v) for v in f.domain}
        if len(kinds) > 1:
            rep.add("domain", f"fluent {f.name} mixes value types {sorted(kinds)}", f.name)
        if not in_domain(f.initial, f.domain):
            what = "initial value" if f.kind == FluentKind.INERTIAL else "default"
            rep.add("domain", f"{what} {f.initial!r} of {f.name} not in its domain", f.name)

    for a in rs.actions:
        if a.kind == ActionKind.WALLTIME:
            sched = list(a.schedule)
            if not sched:
                rep.add("schedule", f"walltime action {a.name} has no schedule", a.name)
            if any(y <= x for x, y in zip(sched, sched[1:])):
                rep.add("schedule", f"schedule of {a.name} is not strictly increasing", a.name)
            if any(t < 0 or t > rs.horizon for t in sched):
                rep.add("schedule", f"schedule of {a.name} leaves [0, horizon]", a.name)
        elif a.schedule:
            rep.add("schedule", f"{a.kind.value} action {a.name} must not have a schedule", a.name)

    for e in rs.effects:
        where = f"effect {e.action}->{e.fluent}"
        if e.action not in rs.action_map:
            rep.add("reference", f"{where}: unknown action {e.action!r}", e.action)
        decl = rs.fluent_map.get(e.fluent)
        if decl is None:
            rep.add("reference", f"{where}: unknown fluent {e.fluent!r}", e.fluent)
        elif decl.kind != FluentKind.INERTIAL:
            rep.add("kind", f"{where}: only inertial fluents can be caused", e.fluent)
        elif not in_domain(e.value, decl.domain):
            rep.add("domain", f"{where}: {e.value!r} not in domain", e.fluent)
        if e.condition is not None:
            _check_formula(rs, e.condition, where, rep)
            if mode == "changepoint":
                for op in _walk_durations(e.condition):
                    if not isinstance(op.sub, Atom):
                        rep.add("compound-duration",
                                f"{where}: duration operator must apply to a single atom", e.action)

    triggered = {a.name for a in rs.actions if a.kind == ActionKind.TRIGGERED}
    fired_by = set()
    for tr in rs.triggers:
        act = rs.action_map.get(tr.action)
        fired_by.add(tr.action)
        if act is None:
            rep.add("reference", f"trigger for unknown action {tr.action!r}", tr.action)
        elif act.kind != ActionKind.TRIGGERED:
            rep.add("kind", f"trigger targets non-triggered action {tr.action}", tr.action)
        if isinstance(tr, AfterTrigger):
            decl = rs.fluent_map.get(tr.fluent)
            if decl is None:
                rep.add("reference", f"trigger {tr.action}: unknown fluent {tr.fluent!r}", tr.fluent)
            elif decl.kind == FluentKind.COUNT:
                rep.add("kind", f"trigger {tr.action}: duration trigger on count fluent", tr.fluent)
            elif not in_domain(tr.value, decl.domain):
                rep.add("domain", f"trigger {tr.action}: {tr.value!r} not in domain", tr.fluent)
            if not isinstance(tr.minutes, int) or tr.minutes <= 0:
                rep.add("duration", f"trigger {tr.action}: duration must be positive", tr.action)
        else:
            decl = rs.fluent_map.get(tr.count_fluent)
            if decl is None:
                rep.add("reference", f"trigger {tr.action}: unknown fluent {tr.count_fluent!r}",
                        tr.count_fluent)
            elif decl.kind != FluentKind.COUNT:
                rep.add("kind", f"trigger {tr.action}: threshold trigger needs a count fluent",
                        tr.count_fluent)
            if not isinstance(tr.threshold, int) or tr.threshold <= 0:
                rep.add("duration", f"trigger {tr.action}: threshold must be positive", tr.action)
    for name in sorted(triggered - fired_by):
        rep.add("trigger", f"triggered action {name} has no trigger", name)

    for r in rs.defined_rules:
        where = f"rule for {r.fluent}"
        decl = rs.fluent_map.get(r.fluent)
        if decl is None:
            rep.add("reference", f"{where}: unknown fluent", r.fluent)
        elif decl.kind != FluentKind.DEFINED:
            rep.add("kind", f"{where}: not a defined fluent", r.fluent)
        elif not in_domain(r.value, decl.domain):
            rep.add("domain", f"{where}: {r.value!r} not in domain", r.fluent)
        _check_formula(rs, r.condition, where, rep)

    counted: dict[str, int] = {}
    for r in rs.count_rules:
        decl = rs.fluent_map.get(r.count_fluent)
        if decl is None:
            rep.add("reference", f"count rule for unknown fluent {r.count_fluent!r}", r.count_fluent)
        elif decl.kind != FluentKind.COUNT:
            rep.add("kind", f"count rule for non-count fluent {r.count_fluent}", r.count_fluent)
        counted[r.count_fluent] = counted.get(r.count_fluent, 0) + 1
        _check_formula(rs, r.condition, f"count rule for {r.count_fluent}", rep)
    for f in rs.fluents_of_kind(FluentKind.COUNT):
        n = counted.get(f.name, 0)
        if n != 1:
            rep.add("count-rule", f"count fluent {f.name} needs exactly one count rule, has {n}", f.name)

    if mode == "changepoint":
        counts = {f.name for f in rs.fluents_of_kind(FluentKind.COUNT)}
        derived = [(r.fluent, r.condition, "defined rule") for r in rs.defined_rules]
        derived += [(r.count_fluent, r.condition, "count rule") for r in rs.count_rules]
        for head, cond, what in derived:
            if has_duration(cond):
                rep.add("duration-in-derived", f"duration operator in {what} for {head}", head)
            if fluents_of(cond) & counts:
                rep.add("count-in-derived", f"{what} for {head} mentions a count fluent", head)

    deps = derived_dependencies(rs)
    for comp in cyclic_components(list(deps), deps):
        members = sorted(comp)
        rep.add("cycle", "dependency cycle through " + ", ".join(members), *members)

    _validate_properties(rs, rep)
    return rep


def _validate_properties(rs: Ruleset, rep: ValidationReport) -> None:
    props = [p.name for p in rs.property_decls]
    known = set(props)
    relevant = set(rs.relevant)
    seen: set[str] = set()
    for name in props:
        if not IDENT.match(name) or name in RESERVED:
            rep.add("name", f"invalid property name {name!r}", name)
        if name in rs.fluent_map or name in rs.action_map:
            rep.add("duplicate", f"property {name} clashes with a fluent or action", name)
        if name in seen:
            rep.add("duplicate", f"property {name} declared more than once", name)
        seen.add(name)

    deps: dict[str, set[str]] = {p: set() for p in props}
    for d in rs.property_decls:
        refs = expr_properties(d.default)
        for ref in refs:
            if ref not in known:
                rep.add("reference", f"default of {d.name} uses unknown property {ref!r}", ref)
        deps[d.name] |= refs & known

    for r in rs.property_rules:
        if r.property not in known:
            rep.add("reference", f"rule for unknown property {r.property!r}", r.property)
            continue
        for ref in formula_props(r.condition):
            if ref == "length":
                continue
            if ref in known:
                deps[r.property].add(ref)
            elif ref in rs.fluent_map:
                if ref not in relevant:
                    rep.add("relevant", f"rule for {r.property} reads non-relevant fluent {ref}", ref)
            else:
                rep.add("reference", f"rule for {r.property} uses unknown name {ref!r}", ref)

    for comp in cyclic_components(props, {k: sorted(v) for k, v in deps.items()}):
        members = sorted(comp)
        rep.add("cycle", "property cycle through " + ", ".join(members), *members)

    if props and rs.wage_property not in known:
        rep.add("property", f"wage property {rs.wage_property!r} is not declared", rs.wage_property)


def ruleset_literals(rs: Ruleset, sc: Scenario | None = None) -> list[tuple[str, int]]:
    """Every time, duration and minute-count literal, labelled with its origin."""
    out: list[tuple[str, int]] = [("horizon", rs.horizon)]
    for a in rs.actions:
        out += [(f"schedule of {a.name}", t) for t in a.schedule]
    for tr in rs.triggers:
        if isinstance(tr, AfterTrigger):
            out.append((f"trigger {tr.action}", tr.minutes))
        else:
            out.append((f"trigger {tr.action}", tr.threshold))
    counts = {f.name for f in rs.fluents_of_kind(FluentKind.COUNT)}
    conds = [(f"effect of {e.action}", e.condition) for e in rs.effects if e.condition is not None]
    conds += [(f"rule for {r.fluent}", r.condition) for r in rs.defined_rules]
    conds += [(f"count rule for {r.count_fluent}", r.condition) for r in rs.count_rules]
    for where, cond in conds:
        out += [(where, d) for d in durations_of(cond)]
        out += [(where, a.value) for a in atoms_of(cond)
                if a.fluent in counts and value_kind(a.value) == "number"]
    if sc is not None:
        out += [(f"user action {a}", t) for a, t in sc.user_actions]
    return out


def check_granularity(rs: Ruleset, sc: Scenario | None, g: int) -> list[str]:
    """Problems preventing an exact run at granularity ``g`` (empty if none)."""
    if not isinstance(g, int) or g < 1:
        return [f"granularity must be a positive integer, got {g!r}"]
    return [f"{where}: {value} is not a multiple of {g}"
            for where, value in ruleset_literals(rs, sc) if value % g]


def validate_scenario(rs: Ruleset, sc: Scenario) -> ValidationReport:
    rep = ValidationReport()
    for a, t in sc.user_actions:
        decl = rs.action_map.get(a)
        if decl is None:
            rep.add("reference", f"scenario uses unknown action {a!r}", a)
        elif decl.kind != ActionKind.USER:
            rep.add("kind", f"scenario schedules {decl.kind.value} action {a}", a)
        if t < 0 or t > rs.horizon:
            rep.add("schedule", f"user action {a} at {t} outside [0, {rs.horizon}]", a)
    return rep
