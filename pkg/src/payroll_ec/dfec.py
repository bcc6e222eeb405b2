"""Reference evaluator for the full discrete functional event calculus.

Unlike the payroll engines this supports releasing fluents from inertia
and (anti)trajectories, i.e. values that follow a function of the time
elapsed since some other fluent was initiated (terminated).  Evaluation is a
single forward pass over ``0..maxtime``: everything at time ``t + 1`` depends
only on facts at times ``<= t``, which is what makes the program stratified
(see ``check_stratification``).
"""

from __future__ import annotations

import itertools
from collections.abc import Container, Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from ._graph import strongly_connected_components
from .errors import InconsistencyError, NonStratifiableError

Value = Any


@dataclass(frozen=True)
class LinearTrajectory:
    """``target = base + rate * t2`` while ``trigger_fluent`` keeps ``trigger_value``.

    ``t2`` is the time elapsed since the initiation (or, used as an
    antitrajectory, the termination).  A ``base`` of ``None`` means the target's
    own value at that initiation/termination.
    """

    trigger_fluent: str
    trigger_value: Value
    target: str
    rate: Any
    base: Any = None


@dataclass
class DfecProgram:
    fluents: Mapping[str, Container]  # fluent -> possible values
    maxtime: int = 100
    initial: Mapping[str, Value] = field(default_factory=dict)
    initially_released: Iterable[str] = ()
    happens: Iterable[tuple[str, int]] = ()
    causes_value: Iterable[tuple[str, str, Value]] = ()
    releases: Iterable[tuple[str, str]] = ()
    trajectories: Iterable = ()  # LinearTrajectory or (f1, v1, t1, f2, v2, t2)
    antitrajectories: Iterable = ()


@dataclass
class DfecModel:
    maxtime: int
    values: list[dict]  # per timepoint; released fluents may be absent
    released_at: dict[str, set[int]]
    initiated: set[tuple[str, Value, int]]
    terminated: set[tuple[str, Value, int]]

    def value(self, f: str, t: int):
        return self.values[t].get(f)

    def has_value(self, f: str, t: int) -> bool:
        return f in self.values[t]


class _Traj:
    """Uniform lookup over table and linear trajectories."""

    def __init__(self, items):
        self.linear: list[LinearTrajectory] = []
        self.table: dict[tuple, list[tuple[str, Value]]] = {}
        for it in items:
            if isinstance(it, LinearTrajectory):
                self.linear.append(it)
            else:
                f1, v1, t1, f2, v2, t2 = it
                self.table.setdefault((f1, v1, t1, t2), []).append((f2, v2))

    def values(self, f1, v1, t1, t2, value_at) -> list[tuple[str, Value]]:
        out = list(self.table.get((f1, v1, t1, t2), ()))
        for lt in self.linear:
            if lt.trigger_fluent == f1 and lt.trigger_value == v1:
                base = lt.base
                if base is None:
                    base = value_at(lt.target, t1)
                    if base is None:
                        continue
                out.append((lt.target, base + lt.rate * t2))
        return out


def evaluate_dfec(p: DfecProgram) -> DfecModel:
    """The unique model of ``p`` over ``0..maxtime``; raises on constraint violations."""
    happens: dict[int, list[str]] = {}
    for a, t in p.happens:
        happens.setdefault(t, []).append(a)
    causes: dict[str, list[tuple[str, Value]]] = {}
    for a, f, v in p.causes_value:
        causes.setdefault(a, []).append((f, v))
    releases: dict[str, set[str]] = {}
    for a, f in p.releases:
        releases.setdefault(a, set()).add(f)
    traj, anti = _Traj(p.trajectories), _Traj(p.antitrajectories)

    values: list[dict] = [dict(p.initial)]
    released: list[set[str]] = [set(p.initially_released)]
    init_events: list[tuple[str, Value, int]] = []
    term_events: list[tuple[str, Value, int]] = []
    inits_by_t: list[set] = []
    terms_by_t: list[set] = []

    def value_at(f, t):
        return values[t].get(f)

    _check_domain(p, values[0], 0)
    for t in range(p.maxtime):
        now = values[t]
        caused: dict[str, set] = {}
        releasing: set[str] = set()
        for a in happens.get(t, ()):
            for f, v in causes.get(a, ()):
                caused.setdefault(f, set()).add(v)
            releasing |= releases.get(a, set())
        inits, terms = set(), set()
        for f, vs in caused.items():
            cur = now.get(f, _NONE)
            for v in vs:
                if cur is _NONE or cur != v:
                    inits.add((f, v))
                if cur is not _NONE and cur != v:
                    terms.add((f, cur))
        inits_by_t.append(inits)
        terms_by_t.append(terms)
        init_events += [(f, v, t) for f, v in inits]
        term_events += [(f, v, t) for f, v in terms]

        # releasedAt(t + 1)
        touched = {f for f, _ in inits} | {f for f, _ in terms}
        clash = releasing & touched
        if clash:
            f = sorted(clash)[0]
            raise InconsistencyError(
                f"{f} is both released and given a value at {t}",
                fluent=f, tick=t, actions=happens.get(t, ()), constraint="release-vs-change")
        rel_next = set(releasing) | {f for f in released[t] if f not in touched}
        released.append(rel_next)

        # candidate values at t + 1
        cand: dict[str, set] = {}
        for f, v in inits:
            cand.setdefault(f, set()).add(v)
        for f, v in now.items():
            if f not in rel_next and (f, v) not in terms:
                cand.setdefault(f, set()).add(v)
        for table, events, blockers in ((traj, init_events, terms_by_t), (anti, term_events, inits_by_t)):
            for f1, v1, t1 in events:
                t2 = t + 1 - t1
                if t2 <= 0:
                    continue
                if any((f1, v1) in blockers[j] for j in range(t1 + 1, t + 1)):
                    continue
                for f2, v2 in table.values(f1, v1, t1, t2, value_at):
                    cand.setdefault(f2, set()).add(v2)

        nxt = {}
        for f, vs in cand.items():
            if len(vs) > 1:
                raise InconsistencyError(
                    f"{f} would have values {sorted(map(repr, vs))} at {t + 1}",
                    fluent=f, tick=t + 1, actions=happens.get(t, ()), constraint="functional")
            nxt[f] = next(iter(vs))
        for f, v in terms:
            if nxt.get(f, _NONE) == v:
                raise InconsistencyError(
                    f"terminated value {v!r} of {f} persists at {t + 1}",
                    fluent=f, tick=t + 1, constraint="termination")
        _check_domain(p, nxt, t + 1)
        values.append(nxt)

    released_at: dict[str, set[int]] = {f: set() for f in p.fluents}
    for t, fs in enumerate(released):
        for f in fs:
            released_at.setdefault(f, set()).add(t)
    return DfecModel(p.maxtime, values, released_at, set(init_events), set(term_events))


class _NoneType:
    pass


_NONE = _NoneType()


def _check_domain(p: DfecProgram, vals: Mapping, t: int) -> None:
    for f, v in vals.items():
        poss = p.fluents.get(f)
        if poss is None or v not in poss:
            raise InconsistencyError(f"{v!r} is not a possible value of {f} (time {t})",
                                     fluent=f, tick=t, constraint="possible-values")


# ---------------------------------------------------------------- stratification


@dataclass(frozen=True)
class PredRef:
    """A predicate occurrence; ``offset`` is its time argument relative to the
    rule's reference time, or ``None`` for predicates ranked without time."""

    name: str
    offset: int | None = None


@dataclass(frozen=True)
class DepRule:
    head: PredRef
    pos: tuple[PredRef, ...] = ()
    neg: tuple[PredRef, ...] = ()


@dataclass
class Strata:
    """``level(p, i) = base[p] + i`` for time-indexed ``p``, else ``base[p]``."""

    base: dict[str, int]
    timed: set[str]

    def level(self, pred: str, i: int = 0) -> int:
        return self.base[pred] + (i if pred in self.timed else 0)


def _edges(rules: Iterable[DepRule]) -> tuple[list[str], list[tuple[str, str, int]], set[str]]:
    preds: dict[str, None] = {}
    timed: set[str] = set()
    static: set[str] = set()
    edges = []
    for r in rules:
        for ref in (r.head, *r.pos, *r.neg):
            preds.setdefault(ref.name)
            (static if ref.offset is None else timed).add(ref.name)
        for body, negated in [(b, 0) for b in r.pos] + [(b, 1) for b in r.neg]:
            h = r.head
            if h.offset is None and body.offset is not None:
                raise NonStratifiableError([h.name, body.name])
            if h.offset is None or body.offset is None:
                w = negated
            else:
                w = body.offset - h.offset + negated
            edges.append((body.name, h.name, w))
    mixed = timed & static
    if mixed:
        raise ValueError(f"predicates used both with and without time: {sorted(mixed)}")
    return list(preds), edges, timed


def check_stratification(rules: Iterable[DepRule]) -> Strata:
    """Find base levels with ``head >= pos`` and ``head > neg`` at matching times.

    The constraints ``b[head] >= b[body] + w`` are solved as a longest-path
    problem; a positive cycle (recursion through negation that no time shift
    breaks) makes the program non-stratifiable.
    """
    rules = list(rules)
    preds, edges, timed = _edges(rules)
    succ: dict[str, list[str]] = {p: [] for p in preds}
    for q, p, _ in edges:
        succ[q].append(p)
    base = {p: 0 for p in preds}
    pred_of: dict[str, str] = {}
    # components are processed in topological order; cycles only live inside one
    comps = list(reversed(strongly_connected_components(preds, succ)))
    comp_of = {p: i for i, c in enumerate(comps) for p in c}
    inner: dict[int, list[tuple[str, str, int]]] = {}
    outer: dict[str, list[tuple[str, str, int]]] = {}
    for q, p, w in edges:
        if comp_of[q] == comp_of[p]:
            inner.setdefault(comp_of[p], []).append((q, p, w))
        else:
            outer.setdefault(q, []).append((q, p, w))
    for i, comp in enumerate(comps):
        es = inner.get(i, [])
        for _ in range(len(comp)):
            changed = False
            for q, p, w in es:
                if base[q] + w > base[p]:
                    base[p] = base[q] + w
                    pred_of[p] = q
                    changed = True
            if not changed:
                break
        else:
            for q, p, w in es:
                if base[q] + w > base[p]:
                    raise NonStratifiableError(_cycle_from(p, q, pred_of, comp))
        for p in comp:
            for _, r, w in outer.get(p, ()):
                base[r] = max(base[r], base[p] + w)
    return Strata(base, timed)


def _cycle_from(p: str, q: str, pred_of: dict, comp: list[str]) -> list[str]:
    """Walk predecessors from a still-relaxable edge ``q -> p`` into the positive cycle."""
    pred_of = dict(pred_of)
    pred_of[p] = q
    node = p
    for _ in range(len(comp)):
        if node not in pred_of:
            return sorted(comp) + [sorted(comp)[0]]
        node = pred_of[node]
    cycle = [node]
    cur = pred_of[node]
    while cur != node:
        cycle.append(cur)
        cur = pred_of[cur]
    cycle.reverse()
    return cycle + [cycle[0]]


def _r(head, *pos, neg=()):
    return DepRule(head, tuple(pos), tuple(neg))


P = PredRef
# Dependency description of the reference program.  Time offsets are
# relative to the rule's reference time T; ``None`` marks predicates that are
# ranked independently of time (facts and time-indexed inputs).
DFEC_RULES: tuple[DepRule, ...] = (
    _r(P("valueCaused"), P("action"), P("happens"), P("causesValue"), P("time")),
    _r(P("initiated", 0), P("fluent"), P("valueCaused"), P("valueOf", 0)),
    _r(P("terminated", 0), P("fluent"), P("valueCaused"), P("valueOf", 0)),
    _r(P("stoppedIn", 0), P("fluent"), P("time"), P("terminated", -1)),
    _r(P("startedIn", 0), P("fluent"), P("time"), P("initiated", -1)),
    _r(P("valueOf", 0), P("fluent"), P("time"), P("initiated", -1), P("trajectory"),
       neg=(P("stoppedIn", 0),)),
    _r(P("valueOf", 0), P("fluent"), P("time"), P("terminated", -1), P("antitrajectory"),
       neg=(P("startedIn", 0),)),
    _r(P("valueOf", 1), P("fluent"), P("time"), P("valueOf", 0),
       neg=(P("terminated", 0), P("releasedAt", 0))),
    _r(P("releasedAt", 1), P("fluent"), P("time"), P("releasedAt", 0), P("possVal"),
       neg=(P("initiated", 0), P("terminated", 0))),
    _r(P("released"), P("fluent"), P("time"), P("releases"), P("action"), P("happens")),
    _r(P("valueOf", 1), P("fluent"), P("time"), P("initiated", 0)),
    _r(P("releasedAt", 1), P("fluent"), P("time"), P("action"), P("releases"), P("happens")),
)


def brute_force_strata(rules: Iterable[DepRule], max_level: int) -> dict[str, int] | None:
    """Exhaustive search for base levels in ``0..max_level`` (small programs only)."""
    preds, edges, _ = _edges(list(rules))
    for combo in itertools.product(range(max_level + 1), repeat=len(preds)):
        b = dict(zip(preds, combo))
        if all(b[p] >= b[q] + w for q, p, w in edges):
            return b
    return None

