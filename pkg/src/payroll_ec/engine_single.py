"""Per-tick forward evaluation of a ruleset over a scenario.

Each tick applies the causes pending from the previous tick (inertia
otherwise), re-derives defined and count fluents, then determines which
actions occur and which causes they produce for the next tick.
"""

from __future__ import annotations

from ._core import Program, RunTrace, TickState, _differs
from .model import FluentKind, Ruleset, Scenario
from .temporal import Timeline, evaluate


def tick_step(rs: Ruleset, prev: TickState, t: int, sc: Scenario | None = None,
              history: Timeline | None = None, program: Program | None = None) -> TickState:
    """Compute the state at tick ``t`` from the state at the previous tick."""
    prog = program or Program(rs, t - prev.t, sc=sc, check=False)
    g = prog.g
    if t != prev.t + g:
        raise ValueError(f"tick {t} does not follow {prev.t} at granularity {g}")
    values = dict(prev.values)
    became = dict(prev.became)
    for f, v, _ in prev.pending_causes:
        if _differs(values[f], v):
            values[f] = v
            became[f] = t
    for name in prog.order:
        if prog.kinds[name] == FluentKind.COUNT:
            hit = evaluate(prog.count_cond[name], values, became, t, g, history)
            v = prev.values[name] + g if hit else prev.values[name]
        else:
            v = prog.defined_value(name, values, became, t, history)
        values[name] = v
        if _differs(v, prev.values[name]):
            became[name] = t
    prev_counts = {c: prev.values[c] for c in prog.counts}
    actions, fired = prog.occurring(t, values, became, prev_counts, history)
    pending = prog.causes(actions, values, became, t, history)
    return TickState(t, values, became, pending, tuple(actions), tuple(fired))


def occurring_actions(rs: Ruleset, sc: Scenario, history: Timeline, t: int,
                      program: Program | None = None) -> set[str]:
    """Actions that happen at tick ``t`` given the recorded history up to ``t``."""
    prog = program or Program(rs, history.granularity, sc=sc, check=False)
    values = history.values_at(t)
    became = {f: history.became_at(f, t) for f in history.fluents}
    prev = history.values_at(t - prog.g) if t > 0 else None
    prev_counts = {c: prev[c] for c in prog.counts} if prev is not None else None
    actions, _ = prog.occurring(t, values, became, prev_counts, history)
    return set(actions)


def effective_causes(rs: Ruleset, actions, state: TickState, t: int | None = None,
                     history: Timeline | None = None, program: Program | None = None) -> set:
    """``(fluent, value)`` pairs caused by ``actions`` in ``state``."""
    prog = program or Program(rs, 1, check=False)
    t = state.t if t is None else t
    causes = prog.causes(sorted(actions), state.values, state.became, t, history)
    return {(f, v) for f, v, _ in causes}


class SingleRun:
    """Incremental single-shot run; ``step()`` advances one tick."""

    def __init__(self, rs: Ruleset, sc: Scenario, g: int = 1, program: Program | None = None):
        self.prog = program or Program(rs, g, "single", sc)
        self.rs, self.sc, self.g = rs, sc, g
        names = self.prog.names
        self.series = {n: [] for n in names}
        self.became = {n: [] for n in names}
        self.timeline = Timeline(rs.horizon, g, self.series, self.became)
        self.happenings: list[tuple[str, int]] = []
        self.fired: list[tuple[str, int]] = []
        self.state: TickState | None = None
        self.steps = 0

    def _record(self, st: TickState) -> None:
        for n in self.prog.names:
            self.series[n].append(st.values[n])
            self.became[n].append(st.became[n])
        self.happenings.extend((a, st.t) for a in st.actions)
        self.fired.extend((a, st.t) for a in st.fired)

    def start(self) -> TickState:
        prog = self.prog
        st = prog.initial_state()
        actions, fired = prog.occurring(0, st.values, st.became, None, self.timeline)
        st.pending_causes = prog.causes(actions, st.values, st.became, 0, self.timeline)
        st.actions, st.fired = tuple(actions), tuple(fired)
        self._record(st)
        self.state = st
        return st

    def step(self) -> TickState:
        prev = self.state
        t = prev.t + self.g
        st = tick_step(self.rs, prev, t, self.sc, self.timeline, self.prog)
        self._record(st)
        self.state = st
        self.steps += 1
        return st

    def run(self) -> RunTrace:
        if self.state is None:
            self.start()
        while self.state.t < self.rs.horizon:
            self.step()
        return RunTrace(self.timeline, sorted(self.happenings, key=_hkey),
                        sorted(self.fired, key=_hkey))


def _hkey(h):
    return (h[1], h[0])


def run_single(rs: Ruleset, sc: Scenario, g: int = 1) -> RunTrace:
    """Evaluate every tick ``0, g, ..., horizon``; the reference semantics."""
    return SingleRun(rs, sc, g).run()
