import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dfec_axiom_violations, random_dfec_program
from payroll_ec.dfec import (DFEC_RULES, DepRule, DfecProgram, LinearTrajectory, PredRef, brute_force_strata,
                             check_stratification, evaluate_dfec)
from payroll_ec.engine_single import run_single
from payroll_ec.errors import InconsistencyError, NonStratifiableError
from payroll_ec.model import ActionDecl, ActionKind, EffectRule, FluentDecl, FluentKind, Ruleset, Scenario


def water_tap(maxtime=20):
    return DfecProgram(
        fluents={"tap": ("open", "closed"), "level": range(0, 100)},
        maxtime=maxtime,
        initial={"tap": "closed", "level": 0},
        happens=[("open", 2), ("close", 8), ("open", 12)],
        causes_value=[("open", "tap", "open"), ("close", "tap", "closed")],
        releases=[("open", "level")],
        trajectories=[LinearTrajectory("tap", "open", "level", 1)],
        antitrajectories=[LinearTrajectory("tap", "open", "level", 0)],
    )


def simulate_tap(maxtime=20):
    """Per-step simulation: an event at t takes effect at t + 1, and the level
    rises by one for every step that ends with the tap open."""
    events = {2: True, 8: False, 12: True}
    level, is_open, out = 0, False, []
    for t in range(maxtime + 1):
        if t > 0:
            is_open = events.get(t - 1, is_open)
            level += is_open
        out.append(level)
    return out


def test_water_tap_trace():
    m = evaluate_dfec(water_tap())
    levels = [m.value("level", t) for t in range(21)]
    assert levels[5] == 3
    assert levels == [0, 0, 0, 1, 2, 3, 4, 5, 6, 6, 6, 6, 6, 7, 8, 9, 10, 11, 12, 13, 14]
    assert levels == simulate_tap()
    assert dfec_axiom_violations(water_tap(), m) == []


def test_pure_inertia():
    p = DfecProgram({"f": (0, 1)}, 10, {"f": 1})
    m = evaluate_dfec(p)
    assert all(m.value("f", t) == 1 for t in range(11))


def test_release_without_later_change_leaves_fluent_valueless():
    p = DfecProgram({"f": (0, 1)}, 10, {"f": 1}, happens=[("r", 3)], releases=[("r", "f")])
    m = evaluate_dfec(p)
    assert m.released_at["f"] == set(range(4, 11))
    assert all(m.has_value("f", t) for t in range(4))
    assert not any(m.has_value("f", t) for t in range(4, 11))


def test_valueless_fluent_can_be_initiated():
    p = DfecProgram({"f": (0, 1)}, 6, {}, happens=[("set", 2)], causes_value=[("set", "f", 1)])
    m = evaluate_dfec(p)
    assert [m.value("f", t) for t in range(7)] == [None, None, None, 1, 1, 1, 1]
    assert ("f", 1, 2) in m.initiated


@pytest.mark.parametrize("program, constraint", [
    (DfecProgram({"f": (0, 1, 2)}, 5, {"f": 0}, happens=[("a", 1), ("b", 1)],
                 causes_value=[("a", "f", 1), ("b", "f", 2)]), "functional"),
    (DfecProgram({"f": (0, 1)}, 5, {"f": 0}, happens=[("a", 1)], causes_value=[("a", "f", 1)],
                 releases=[("a", "f")]), "release-vs-change"),
    (DfecProgram({"f": (0, 1)}, 5, {"f": 0}, happens=[("a", 1)], causes_value=[("a", "f", 7)]),
     "possible-values"),
])
def test_constraint_violations(program, constraint):
    with pytest.raises(InconsistencyError) as err:
        evaluate_dfec(program)
    assert err.value.constraint == constraint


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_axioms_hold_on_random_programs(seed):
    p = random_dfec_program(random.Random(seed))
    try:
        m = evaluate_dfec(p)
    except InconsistencyError:
        return
    assert dfec_axiom_violations(p, m) == []


def _as_ruleset(p):
    fluents = tuple(FluentDecl(f, FluentKind.INERTIAL, tuple(dom), p.initial[f]) for f, dom in p.fluents.items())
    names = sorted({a for a, _, _ in p.causes_value} | {a for a, _ in p.happens})
    return (Ruleset(fluents, tuple(ActionDecl(a, ActionKind.USER) for a in names),
                    tuple(EffectRule(a, f, v) for a, f, v in p.causes_value), horizon=p.maxtime),
            Scenario(tuple(p.happens)))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_restricted_programs_agree_with_single_engine(seed):
    rng = random.Random(seed)
    p = random_dfec_program(rng, releases=False, trajectories=False)
    p.initial = {f: p.initial.get(f, 0) for f in p.fluents}
    rs, sc = _as_ruleset(p)
    try:
        tl = run_single(rs, sc).timeline
    except InconsistencyError:
        return
    m = evaluate_dfec(p)
    for t in range(p.maxtime + 1):
        assert m.values[t] == tl.values_at(t)


def test_stratification_of_builtin_rules():
    s = check_stratification(DFEC_RULES)
    i = 7
    for timed in ("stoppedIn", "startedIn"):
        assert s.level(timed, i) == i
    for nxt in ("valueOf", "initiated", "terminated", "releasedAt"):
        assert s.level(nxt, i) == i + 1
    for static in ("fluent", "time", "happens", "possVal", "trajectory", "released"):
        assert s.level(static, i) == 0
    assert s.level("valueOf", i) > s.level("stoppedIn", i)


def test_negative_self_loop_is_rejected():
    p = PredRef("p")
    with pytest.raises(NonStratifiableError) as err:
        check_stratification([DepRule(p, (), (p,))])
    assert set(err.value.cycle) == {"p"}


def test_negation_through_time_is_fine():
    p0, p1 = PredRef("p", 0), PredRef("p", 1)
    s = check_stratification([DepRule(p1, (), (p0,))])
    assert s.level("p", 1) > s.level("p", 0)


def test_positive_program_has_equal_levels():
    a, b, c = PredRef("a"), PredRef("b"), PredRef("c")
    s = check_stratification([DepRule(a, (b,)), DepRule(b, (c,)), DepRule(c, (a,))])
    assert len({s.level(x) for x in "abc"}) == 1


def test_static_head_over_timed_body_is_rejected():
    with pytest.raises(NonStratifiableError):
        check_stratification([DepRule(PredRef("s"), (PredRef("t", 0),))])


@st.composite
def static_rules(draw):
    names = [PredRef(n) for n in "pqrst"[: draw(st.integers(1, 5))]]
    rules = []
    for _ in range(draw(st.integers(1, 7))):
        head = draw(st.sampled_from(names))
        pos = tuple(draw(st.lists(st.sampled_from(names), max_size=2)))
        neg = tuple(draw(st.lists(st.sampled_from(names), max_size=2)))
        rules.append(DepRule(head, pos, neg))
    return rules


@settings(max_examples=200, deadline=None)
@given(static_rules())
def test_stratification_matches_exhaustive_search(rules):
    expected = brute_force_strata(rules, max_level=5)
    try:
        s = check_stratification(rules)
    except NonStratifiableError as err:
        assert expected is None
        assert err.cycle[0] == err.cycle[-1]
        return
    assert expected is not None
    for r in rules:
        for b in r.pos:
            assert s.level(r.head.name) >= s.level(b.name)
        for b in r.neg:
            assert s.level(r.head.name) > s.level(b.name)
