"""Changepoint-skipping evaluation.

Only ticks at which some action can occur are evaluated.  Between two such
changepoints every non-count fluent is constant (from one tick after the
earlier changepoint, when its effects land) and every count fluent grows
linearly or not at all.  The next changepoint is the earlier of the next
scheduled action and the earliest tick at which a trigger could fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._core import Program, RunTrace, TickState, _differs
from .model import FluentKind, Ruleset, Scenario
from .temporal import SegmentTimeline, evaluate


@dataclass
class ChangepointTrace:
    changepoints: list[int] = field(default_factory=list)
    states: list[TickState] = field(default_factory=list)
    advance_count: int = 0

    def same_since(self) -> list[dict[str, int]]:
        """Per changepoint: fluent -> tick since which its value has been unchanged."""
        return [dict(st.became) for st in self.states]


def upfront_points(rs: Ruleset, sc: Scenario) -> list[int]:
    """Ticks with scheduled (user or walltime) actions, plus the horizon."""
    pts = {t for _, t in sc.user_actions}
    for a in rs.actions:
        pts.update(a.schedule)
    pts.add(rs.horizon)
    return sorted(t for t in pts if t <= rs.horizon)


class ChangepointRun:
    """Explicit-state implementation of the solve loop.

    ``state`` is the pre-effect state at the current changepoint (causes
    produced there are pending).  ``post`` lazily holds the state that the
    world settles into one tick later and keeps until the next changepoint.
    """

    def __init__(self, rs: Ruleset, sc: Scenario, g: int = 1, program: Program | None = None,
                 fault=None):
        self.prog = program or Program(rs, g, "changepoint", sc)
        self.rs, self.sc, self.g = rs, sc, g
        self.fault = fault
        self.trace = ChangepointTrace()
        self.happenings: list[tuple[str, int]] = []
        self.fired: list[tuple[str, int]] = []
        self.seg_starts: list[int] = []
        self.seg_states: list[dict] = []
        self.seg_counts: list[dict] = []
        self.state: TickState | None = None
        self._post: tuple[dict, dict] | None = None

    # state construction -------------------------------------------------

    def _settle(self, st: TickState) -> tuple[dict, dict]:
        """Values and run starts holding on ``(st.t, next changepoint]``."""
        prog, t1 = self.prog, st.t + self.g
        values = dict(st.values)
        became = dict(st.became)
        for f, v, _ in st.pending_causes:
            if _differs(values[f], v):
                values[f] = v
                became[f] = t1
        for name in prog.order:
            if prog.kinds[name] == FluentKind.DEFINED:
                v = prog.defined_value(name, values, became, t1)
                if _differs(v, st.values[name]):
                    became[name] = t1
                values[name] = v
        return values, became

    def post(self) -> tuple[dict, dict]:
        if self._post is None:
            self._post = self._settle(self.state)
        return self._post

    def _accumulating(self, values) -> dict[str, bool]:
        return {c: evaluate(self.prog.count_cond[c], values, {}, 0, self.g) for c in self.prog.counts}

    def _fire(self, st: TickState, prev_counts) -> TickState:
        prog = self.prog
        actions, fired = prog.occurring(st.t, st.values, st.became, prev_counts)
        st.pending_causes = prog.causes(actions, st.values, st.became, st.t)
        st.actions, st.fired = tuple(actions), tuple(fired)
        self.happenings.extend((a, st.t) for a in actions)
        self.fired.extend((a, st.t) for a in fired)
        self.trace.changepoints.append(st.t)
        self.trace.states.append(st)
        return st

    def start(self) -> TickState:
        st = self.prog.initial_state()
        self.seg_starts.append(0)
        self.seg_states.append({n: st.values[n] for n in self.prog.names if n not in self.prog.counts})
        self.seg_counts.append({c: (0, 0, 0) for c in self.prog.counts})
        self.state = self._fire(st, None)
        self._post = None
        return self.state

    def advance(self, cp: int) -> TickState:
        """One dynamic step from the current changepoint to ``cp``."""
        pp = self.state.t
        if cp <= pp:
            raise ValueError(f"changepoint {cp} does not advance past {pp}")
        values, became = self.post()
        values, became = dict(values), dict(became)
        acc = self._accumulating(values)
        delta = cp - pp
        prev_counts = {}
        seg_counts = {}
        for c in self.prog.counts:
            base = self.state.values[c]
            if acc[c]:
                values[c] = base + delta
                became[c] = cp
                prev_counts[c] = values[c] - self.g
            else:
                values[c] = base
                prev_counts[c] = base
            seg_counts[c] = (pp, base, 1 if acc[c] else 0)
        self.seg_starts.append(pp + self.g)
        self.seg_states.append({n: values[n] for n in self.prog.names if n not in self.prog.counts})
        self.seg_counts.append(seg_counts)
        if self.fault is not None:
            self.fault(cp, values)
        st = TickState(cp, values, became)
        self.state = self._fire(st, prev_counts)
        self._post = None
        self.trace.advance_count += 1
        return self.state

    # scheduling ---------------------------------------------------------

    def search_next(self) -> float:
        """Earliest tick after the current changepoint at which a trigger can fire."""
        cur = self.state.t
        g = self.g
        values, became = self.post()
        best = math.inf
        for tr, _ in self.prog.after:
            if _differs(values[tr.fluent], tr.value):
                continue
            b = became[tr.fluent]
            cand = max(tr.minutes, b + tr.minutes - g)
            if cand > cur:
                best = min(best, cand)
        if self.prog.when:
            acc = self._accumulating(values)
            for tr in self.prog.when:
                c = tr.count_fluent
                have = self.state.values[c]
                if acc[c] and have < tr.threshold:
                    best = min(best, cur + (tr.threshold - have))
        return best

    def run(self) -> tuple[RunTrace, ChangepointTrace]:
        if self.state is None:
            self.start()
        upfront = upfront_points(self.rs, self.sc)
        i = 0
        horizon = self.rs.horizon
        while self.state.t < horizon:
            while upfront[i] <= self.state.t:
                i += 1
            nxt = self.search_next()
            if nxt < upfront[i]:
                cp = int(nxt)
            else:
                cp = upfront[i]
                i += 1
            self.advance(cp)
        tl = SegmentTimeline(horizon, self.g, self.seg_starts, self.seg_states, self.seg_counts)
        trace = RunTrace(tl, sorted(self.happenings, key=lambda h: (h[1], h[0])),
                         sorted(self.fired, key=lambda h: (h[1], h[0])))
        return trace, self.trace


def search_next(run: ChangepointRun) -> float:
    return run.search_next()


def run_changepoint(rs: Ruleset, sc: Scenario, g: int = 1, fault=None) -> tuple[RunTrace, ChangepointTrace]:
    """Evaluate only changepoints; returns the run trace and changepoint bookkeeping."""
    return ChangepointRun(rs, sc, g, fault=fault).run()
