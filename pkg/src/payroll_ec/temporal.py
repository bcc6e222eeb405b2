"""Linear-time temporal formulas over discrete timelines.

Formulas are built from atoms ``f=v``, conjunction, negation and the
duration operator ``AtLeast(n, phi)`` (``[>=n] phi``): phi has held on every
tick of the last ``n`` minutes, including the present one.  ``Exactly(n, phi)``
abbreviates ``[>=n]phi and not [>=n+g]phi``.

A timeline with granularity ``g`` has ticks ``0, g, 2g, ..., horizon``.  Tick
``t > 0`` stands for the block of minutes ``(t-g, t]``; tick 0 is the initial
instant.  Durations are therefore measured in minutes and are invariant under
refining ``g`` as long as ``g`` divides every literal.
"""

from __future__ import annotations

import bisect
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Union

from .errors import RangeError, UnknownNameError

Value = Any  # str (symbol) | bool | int | Fraction


@dataclass(frozen=True)
class Atom:
    fluent: str
    value: Value


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class AtLeast:
    minutes: int
    sub: "Formula"


@dataclass(frozen=True)
class Exactly:
    minutes: int
    sub: "Formula"


Formula = Union[Atom, And, Not, AtLeast, Exactly]


def conj(*parts: Formula) -> Formula:
    """Conjunction that collapses the single-conjunct case."""
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def fluents_of(phi: Formula) -> set[str]:
    if isinstance(phi, Atom):
        return {phi.fluent}
    if isinstance(phi, And):
        out: set[str] = set()
        for p in phi.parts:
            out |= fluents_of(p)
        return out
    return fluents_of(phi.sub)


def atoms_of(phi: Formula) -> list[Atom]:
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, And):
        return [a for p in phi.parts for a in atoms_of(p)]
    return atoms_of(phi.sub)


def durations_of(phi: Formula) -> list[int]:
    """Every duration literal (in minutes) used by the formula."""
    if isinstance(phi, Atom):
        return []
    if isinstance(phi, And):
        return [d for p in phi.parts for d in durations_of(p)]
    if isinstance(phi, (AtLeast, Exactly)):
        return [phi.minutes, *durations_of(phi.sub)]
    return durations_of(phi.sub)


def has_duration(phi: Formula) -> bool:
    return bool(durations_of(phi))


def depth(phi: Formula) -> int:
    if isinstance(phi, Atom):
        return 1
    if isinstance(phi, And):
        return 1 + max(depth(p) for p in phi.parts)
    return 1 + depth(phi.sub)


class Timeline:
    """Dense per-tick record of every fluent's value.

    ``series[f][i]`` is the value of ``f`` at tick ``i * g``.  ``became[f][i]``
    is the earliest tick since which ``f`` has carried that value.  A timeline
    may be partial (fewer ticks than ``horizon // g + 1``) while an engine is
    still extending it.
    """

    def __init__(self, horizon: int, granularity: int,
                 series: Mapping[str, list], became: Mapping[str, list] | None = None):
        if granularity < 1:
            raise RangeError("granularity must be >= 1")
        self.horizon = horizon
        self.granularity = granularity
        self.series = dict(series)
        if became is None:
            became = {f: _became_series(vals, granularity) for f, vals in self.series.items()}
        self.became = dict(became)

    @property
    def fluents(self) -> list[str]:
        return list(self.series)

    def __len__(self) -> int:
        return len(next(iter(self.series.values()))) if self.series else self.horizon // self.granularity + 1

    @property
    def ticks(self) -> range:
        return range(0, len(self) * self.granularity, self.granularity)

    def index(self, t: int) -> int:
        g = self.granularity
        if t < 0 or t % g or t > self.horizon:
            raise RangeError(f"{t} is not a tick of a granularity-{g} timeline up to {self.horizon}")
        return t // g

    def _series(self, f: str) -> list:
        try:
            return self.series[f]
        except KeyError:
            raise UnknownNameError(f, "fluent") from None

    def value(self, f: str, t: int) -> Value:
        return self._series(f)[self.index(t)]

    def became_at(self, f: str, t: int) -> int:
        self._series(f)
        return self.became[f][self.index(t)]

    def values_at(self, t: int) -> dict[str, Value]:
        i = self.index(t)
        return {f: vals[i] for f, vals in self.series.items()}

    def change_ticks(self, f: str) -> list[int]:
        """Ticks ``t > 0`` whose value differs from the previous tick."""
        vals = self._series(f)
        g = self.granularity
        return [i * g for i in range(1, len(vals)) if vals[i] != vals[i - 1]]

    def minute_value(self, f: str, m: int) -> Value:
        """Value during minute ``m`` (the tick whose block contains ``m``)."""
        g = self.granularity
        return self.value(f, -(-m // g) * g)

    def to_minutes(self) -> "Timeline":
        """Per-minute expansion (granularity 1) of this timeline."""
        if self.granularity == 1:
            return self
        g = self.granularity
        n = (len(self) - 1) * g + 1
        series = {f: [vals[-(-m // g)] for m in range(n)] for f, vals in self.series.items()}
        return Timeline(self.horizon, 1, series)


def _became_series(vals: Sequence, g: int) -> list[int]:
    out = []
    start = 0
    for i, v in enumerate(vals):
        if i and v != vals[i - 1]:
            start = i * g
        out.append(start)
    return out


class _TickView(Mapping):
    """Read-only mapping over one tick of a timeline (avoids copying)."""

    __slots__ = ("_tl", "_i", "_attr")

    def __init__(self, tl: Timeline, i: int, attr: str):
        self._tl, self._i, self._attr = tl, i, attr

    def __getitem__(self, f):
        try:
            return getattr(self._tl, self._attr)[f][self._i]
        except KeyError:
            raise UnknownNameError(f, "fluent") from None

    def __iter__(self):
        return iter(self._tl.series)

    def __len__(self):
        return len(self._tl.series)


def held_for(tl: Timeline, f: str, v: Value, t: int) -> int:
    """Minutes covered by the maximal run of ticks ending at ``t`` on which ``f == v``."""
    if tl.value(f, t) != v:
        return 0
    return t - tl.became_at(f, t) + tl.granularity


def holds(phi: Formula, tl: Timeline, t: int) -> bool:
    """Whether ``phi`` is satisfied at tick ``t`` of ``tl``."""
    i = tl.index(t)
    if i >= len(tl):
        raise RangeError(f"tick {t} beyond the recorded timeline")
    return evaluate(phi, _TickView(tl, i, "series"), _TickView(tl, i, "became"),
                    t, tl.granularity, tl)


def evaluate(phi: Formula, values: Mapping, became: Mapping, t: int, g: int = 1,
             history: Timeline | None = None) -> bool:
    """Evaluate ``phi`` at tick ``t`` from that tick's values and run starts.

    ``history`` supplies earlier ticks; it is only consulted for duration
    operators applied to non-atomic formulas.
    """
    kind = type(phi)
    if kind is Atom:
        return values[phi.fluent] == phi.value
    if kind is And:
        for part in phi.parts:
            if not evaluate(part, values, became, t, g, history):
                return False
        return True
    if kind is Not:
        return not evaluate(phi.sub, values, became, t, g, history)
    if kind is AtLeast:
        return _at_least(phi.minutes, phi.sub, values, became, t, g, history)
    if kind is Exactly:
        n = phi.minutes
        return (_at_least(n, phi.sub, values, became, t, g, history)
                and not _at_least(n + g, phi.sub, values, became, t, g, history))
    raise TypeError(f"not a temporal formula: {phi!r}")


def _at_least(n, sub, values, became, t, g, history) -> bool:
    if n % g:
        raise RangeError(f"duration {n} is not a multiple of granularity {g}")
    if t < n:
        return False
    if type(sub) is Atom:
        f = sub.fluent
        return values[f] == sub.value and t - became[f] + g >= n
    if not evaluate(sub, values, became, t, g, history):
        return False
    if history is None:
        raise ValueError("duration over a compound formula needs the timeline history")
    for j in range(t - n + g, t, g):
        if not holds(sub, history, j):
            return False
    return True


class SegmentTimeline:
    """Piecewise timeline: constant values between sparse change ticks.

    ``starts`` is increasing with ``starts[0] == 0``; ``states[k]`` holds the
    non-count values on ticks ``[starts[k], starts[k+1])``.  Count fluents are
    piecewise linear: on segment ``k`` they equal ``base + slope * (t - anchor)``
    with ``counts[k][f] = (anchor, base, slope)``.
    """

    def __init__(self, horizon: int, granularity: int, starts: list[int],
                 states: list[dict], counts: list[dict]):
        self.horizon = horizon
        self.granularity = granularity
        self.starts = starts
        self.states = states
        self.counts = counts
        self._fluents = list(states[0]) + [f for f in counts[0] if f not in states[0]]

    @property
    def fluents(self) -> list[str]:
        return list(self._fluents)

    def __len__(self) -> int:
        return self.horizon // self.granularity + 1

    @property
    def ticks(self) -> range:
        return range(0, self.horizon + 1, self.granularity)

    def _segment(self, t: int) -> int:
        if t < 0 or t > self.horizon or t % self.granularity:
            raise RangeError(f"{t} is not a tick of this timeline")
        return bisect.bisect_right(self.starts, t) - 1

    def value(self, f: str, t: int) -> Value:
        k = self._segment(t)
        if f in self.counts[k]:
            anchor, base, slope = self.counts[k][f]
            return base + slope * (t - anchor)
        try:
            return self.states[k][f]
        except KeyError:
            raise UnknownNameError(f, "fluent") from None

    def change_ticks(self, f: str) -> list[int]:
        g = self.granularity
        out: list[int] = []
        if f in self.counts[0]:
            for k, start in enumerate(self.starts):
                anchor, base, slope = self.counts[k][f]
                end = self.starts[k + 1] if k + 1 < len(self.starts) else self.horizon + g
                if slope:
                    first = max(start, g)
                    out.extend(range(first, end, g))
                elif k and start and self.value(f, start) != self.value(f, start - g):
                    out.append(start)
            return out
        if f not in self.states[0]:
            raise UnknownNameError(f, "fluent")
        for k in range(1, len(self.starts)):
            if self.states[k][f] != self.states[k - 1][f]:
                out.append(self.starts[k])
        return out

    def became_at(self, f: str, t: int) -> int:
        changes = self.change_ticks(f)
        k = bisect.bisect_right(changes, t)
        return changes[k - 1] if k else 0

    def minute_value(self, f: str, m: int) -> Value:
        g = self.granularity
        return self.value(f, -(-m // g) * g)

    def to_dense(self) -> Timeline:
        g = self.granularity
        series = {}
        for f in self._fluents:
            out: list = []
            for k, start in enumerate(self.starts):
                end = self.starts[k + 1] if k + 1 < len(self.starts) else self.horizon + g
                if f in self.counts[k]:
                    anchor, base, slope = self.counts[k][f]
                    out.extend(base + slope * (t - anchor) for t in range(start, end, g))
                else:
                    out.extend([self.states[k][f]] * ((end - start) // g))
            series[f] = out
        return Timeline(self.horizon, g, series)
