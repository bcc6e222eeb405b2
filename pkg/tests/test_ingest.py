import re
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from payroll_ec.errors import ParseError
from payroll_ec.ingest import (parse_condition, parse_document, parse_duration, parse_interval_condition,
                               parse_property_expr, parse_scenario, parse_time, parse_trigger, parse_value,
                               read_tables, render_condition, render_document, render_expr,
                               render_interval_condition, render_scenario, render_value)
from payroll_ec.intervals import Arith, Compare, IntAnd, Literal, Next, PropRef, This
from payroll_ec.model import FluentKind, Scenario
from payroll_ec.temporal import And, AtLeast, Atom, Exactly, Not

MALFORMED = sorted(Path(__file__).parent.joinpath("corpus", "malformed").glob("*.tables"))


def test_fixture_shape(fixture):
    rs, sc = fixture
    kinds = [f.kind for f in rs.fluents]
    assert kinds.count(FluentKind.INERTIAL) == 7
    assert kinds.count(FluentKind.DEFINED) == 1
    assert kinds.count(FluentKind.COUNT) == 1
    assert sum(len(a.schedule) for a in rs.actions) == 4
    assert len(rs.triggers) == 2
    assert len(sc.user_actions) == 4


def test_empty_document():
    rs, sc = parse_document("")
    assert rs.fluents == () and rs.actions == () and sc == Scenario()


def test_when_trigger():
    tr = parse_trigger("workedHours=8h00", "cumulPremium")
    assert (tr.count_fluent, tr.threshold, tr.action) == ("workedHours", 480, "cumulPremium")
    after = parse_trigger("shiftStarted=true since 1h00", "x")
    assert (after.fluent, after.value, after.minutes) == ("shiftStarted", True, 60)
    with pytest.raises(ParseError):
        parse_trigger("mood=happy", "x")


def test_conditions():
    assert parse_condition("present=true and shiftStarted=true") == \
        And((Atom("present", True), Atom("shiftStarted", True)))
    assert parse_condition("shiftStarted=true since 1h00") == AtLeast(60, Atom("shiftStarted", True))
    assert parse_condition("shiftStarted=true since 1h00", trigger=True) == Exactly(60, Atom("shiftStarted", True))
    assert parse_condition("not (present=true)") == Not(Atom("present", True))
    assert parse_condition("x=day since 90") == AtLeast(90, Atom("x", "day"))


def test_interval_conditions():
    phi = parse_interval_condition("timeOfDay=day and [next]timeOfDay=night and length < [next]length")
    assert isinstance(phi, IntAnd) and len(phi.parts) == 3
    assert phi.parts[1] == Compare(PropRef(Next(This()), "timeOfDay"), "=", Literal("night"))
    assert parse_interval_condition("length = length") == \
        Compare(PropRef(This(), "length"), "=", PropRef(This(), "length"))


def test_property_expression():
    e = parse_property_expr("= normalwage * (1 + nightpremium + cumulpremium)")
    assert isinstance(e, Arith) and e.op == "*"
    refs = []

    def walk(x):
        if isinstance(x, PropRef):
            refs.append(x.prop)
        elif isinstance(x, Arith):
            walk(x.lhs)
            walk(x.rhs)
    walk(e)
    assert refs == ["normalwage", "nightpremium", "cumulpremium"]
    assert render_expr(e) == "normalwage * (1 + nightpremium + cumulpremium)"
    assert render_expr(parse_property_expr("a - (b - c)")) == "a - (b - c)"
    assert render_expr(parse_property_expr("(a - b) - c")) == "a - b - c"


@pytest.mark.parametrize("text, value", [("true", True), ("false", False), ("night", "night"), ("20", 20),
                                         ("0.20", Fraction(1, 5)), ("1/3", Fraction(1, 3)), ("2/2", 1),
                                         ("1h30", 90)])
def test_values(text, value):
    v = parse_value(text)
    assert v == value and type(v) is type(value)


@pytest.mark.parametrize("text, minutes", [("22h00", 1320), ("0h00", 0), ("1d0h00", 1440), ("1d23h59", 2879)])
def test_times(text, minutes):
    assert parse_time(text) == minutes


def test_durations_allow_long_hours():
    assert parse_duration("30h00") == 1800
    with pytest.raises(ParseError):
        parse_time("30h00")
    with pytest.raises(ParseError):
        parse_duration("1h60")


@pytest.mark.parametrize("path", MALFORMED, ids=lambda p: p.stem)
def test_malformed_documents_give_positioned_errors(path):
    text = path.read_text()
    line, col, fragment = re.match(r"# expect: (\d+):(\d+) (.*)", text).groups()
    with pytest.raises(ParseError) as err:
        parse_document(text)
    assert (err.value.line, err.value.column) == (int(line), int(col))
    assert fragment in err.value.message
    assert str(err.value).startswith(f"{line}:{col}: ")


def test_corpus_has_twenty_documents():
    assert len(MALFORMED) == 20


def test_comments_and_blank_lines(fixture_text):
    tables = read_tables(fixture_text)
    assert [t.name for t in tables][:2] == ["inertial_fluents", "defined_fluents"]
    assert tables[0].line == 3


def test_round_trip_is_idempotent(fixture):
    rs, sc = fixture
    once = render_document(rs, sc)
    rs2, sc2 = parse_document(once)
    assert (rs2, sc2) == (rs, sc)
    assert render_document(rs2, sc2) == once


def test_scenario_documents():
    sc = Scenario((("clockIn", 825), ("clockOut", 1500)))
    text = render_scenario(sc)
    assert "1d1h00" in text
    assert parse_scenario(text) == sc
    with pytest.raises(ParseError):
        parse_scenario("table walltime_actions\naction | time\nx | 1h00\n")


def test_render_helpers():
    assert render_value(Fraction(1, 5)) == "0.2"
    assert render_value(Fraction(-1, 4)) == "-0.25"
    assert render_value(Fraction(1, 3)) == "1/3"
    assert render_condition(Exactly(60, Atom("s", True))) == "s=true since 1h00"
    rendered = render_interval_condition(parse_interval_condition("p = [this]q and not (length > 5)"))
    assert rendered == "p = [this]q and not (length > 5)"


@st.composite
def conditions(draw, depth=3):
    atom = st.builds(Atom, st.sampled_from(["a", "b", "c"]),
                     st.one_of(st.booleans(), st.sampled_from(["x", "y"]), st.integers(0, 99)))
    if depth <= 1:
        return draw(atom)
    kind = draw(st.sampled_from(["atom", "since", "not", "and"]))
    if kind == "atom":
        return draw(atom)
    if kind == "since":
        return AtLeast(draw(st.integers(1, 3000)), draw(atom))
    if kind == "not":
        return Not(draw(conditions(depth - 1)))
    parts = draw(st.lists(conditions(depth - 1), min_size=2, max_size=3))
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, And) else [p])
    return And(tuple(flat))


@given(conditions())
def test_condition_round_trip(phi):
    text = render_condition(phi)
    assert parse_condition(text) == phi
    assert render_condition(parse_condition(text)) == text


@given(st.fractions(min_value=-1000, max_value=1000, max_denominator=64))
def test_value_round_trip(x):
    v = int(x) if x.denominator == 1 else x
    assert parse_value(render_value(v).lstrip("-")) == abs(v)
