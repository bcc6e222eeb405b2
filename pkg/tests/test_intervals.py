from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from payroll_ec.engine_single import run_single
from payroll_ec.errors import AmbiguityError, EvaluationError
from payroll_ec.ingest import parse_interval_condition
from payroll_ec.intervals import (Compare, Interval, Literal, PropertyDecl, PropertyRule, PropRef, This,
                                  boundaries, build_intervals, compare, eval_properties, int_holds, segment,
                                  to_cents, total_wage)
from payroll_ec.temporal import Timeline

PAID = [(841, 961, 20, 40), (991, 1321, 20, 110), (1321, 1351, 24, 12), (1351, 1411, 29, 29)]


@pytest.fixture(scope="module")
def fixture_run(fixture):
    rs, sc = fixture
    tl = run_single(rs, sc).timeline
    ivs = segment(tl, rs.relevant)
    props = eval_properties(ivs, rs.property_decls, rs.property_rules)
    return rs, tl, ivs, props


def test_boundaries_of_fixture(fixture_run):
    rs, tl, ivs, _ = fixture_run
    assert boundaries(tl, rs.relevant) == [0, 421, 841, 961, 991, 1321, 1351, 1411, 2880]


def test_boundaries_trivial_cases():
    tl = Timeline(100, 5, {"f": [1] * 21})
    assert boundaries(tl, ["f"]) == [0, 100]
    assert boundaries(tl, []) == [0, 100]


def test_coarse_change_maps_to_block_start():
    tl = Timeline(20, 5, {"f": [0, 0, 1, 1, 1]})
    assert boundaries(tl, ["f"]) == [0, 6, 20]


def test_build_intervals(fixture_run):
    _, tl, ivs, _ = fixture_run
    whole = build_intervals([0, 2880])
    assert len(whole) == 1 and whole[0].length_minutes == 2880
    iv = next(i for i in ivs if i.start == 1321)
    assert (iv.end, iv.length_minutes) == (1351, 30)
    assert iv.relevant_values == {"timeOfDay": "night", "cumul": False, "atWork": True}
    assert all(a.end == b.start for a, b in zip(ivs, ivs[1:]))


def test_night_spillover_rule(fixture_run):
    rs, _, ivs, _ = fixture_run
    rule = parse_interval_condition("timeOfDay=day and [next]timeOfDay=night and length < [next]length")
    k = next(i.id for i in ivs if i.start == 991)
    assert ivs[k].length_minutes == 330 and ivs[k + 1].length_minutes == 30
    assert not int_holds(rule, k, ivs)


def test_out_of_range_reference_is_false(fixture_run):
    _, _, ivs, _ = fixture_run
    prev = parse_interval_condition("[prev]length = [prev]length")
    assert not int_holds(prev, 0, ivs)
    assert int_holds(parse_interval_condition("not ([prev]length = 0)"), 0, ivs)
    same = parse_interval_condition("length = length")
    assert all(int_holds(same, k, ivs) for k in range(len(ivs)))


def test_property_values(fixture_run):
    _, _, ivs, props = fixture_run
    by_start = {iv.start: p for iv, p in zip(ivs, props)}
    assert by_start[841] == {"normalwage": 20, "nightpremium": 0, "cumulpremium": 0, "totalWage": 20}
    last = by_start[1351]
    assert (last["nightpremium"], last["cumulpremium"]) == (Fraction(1, 5), Fraction(1, 4))
    assert last["totalWage"] == 29
    assert by_start[0]["normalwage"] == 0 and by_start[0]["totalWage"] == 0


def test_fixture_wage(fixture_run):
    rs, _, ivs, props = fixture_run
    w = total_wage(ivs, props, rs.wage_property)
    assert w.total == Decimal("191.00")
    assert [(ln.start, ln.end, ln.rate, ln.amount) for ln in w.paid()] == PAID
    assert w.exact == sum(ln.amount for ln in w.lines)


def test_wage_trivial_cases():
    iv = [Interval(0, 0, 60)]
    assert total_wage(iv, [{"totalWage": 20}]).total == Decimal("20.00")
    assert total_wage(iv, [{"totalWage": 0}]).total == Decimal("0.00")
    with pytest.raises(EvaluationError):
        total_wage(iv, [{"totalWage": "high"}])


@pytest.mark.parametrize("x, cents", [(Fraction(1, 200), "0.00"), (Fraction(3, 200), "0.02"),
                                      (Fraction(1, 3), "0.33"), (Fraction(191), "191.00"),
                                      (Fraction(-1, 200), "0.00")])
def test_to_cents_rounds_half_even(x, cents):
    assert to_cents(x) == Decimal(cents)
    assert str(to_cents(x)).lstrip("-") == cents


def test_compare():
    assert compare(1, "=", Fraction(1)) and not compare(True, "=", 1)
    assert compare("a", "!=", "b")
    with pytest.raises(EvaluationError):
        compare("a", "<", "b")


def test_conflicting_property_rules_raise():
    ivs = [Interval(0, 0, 10, {"f": 1})]
    cond = Compare(PropRef(This(), "f"), "=", Literal(1))
    rules = [PropertyRule("p", cond, 1), PropertyRule("p", cond, 2)]
    with pytest.raises(AmbiguityError):
        eval_properties(ivs, [PropertyDecl("p")], rules)
    same = [PropertyRule("p", cond, 1), PropertyRule("p", cond, 1)]
    assert eval_properties(ivs, [PropertyDecl("p")], same) == [{"p": 1}]


def test_properties_may_read_other_properties():
    ivs = build_intervals([0, 10, 30])
    cond = Compare(PropRef(This(), "base"), "<", PropRef(This(), "length"))
    decls = [PropertyDecl("base", 15), PropertyDecl("p", 0)]
    out = eval_properties(ivs, decls, [PropertyRule("p", cond, 1)])
    assert [o["p"] for o in out] == [0, 1]


@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_intervals_partition_the_horizon(lengths):
    bs = [0]
    for n in lengths:
        bs.append(bs[-1] + n)
    ivs = build_intervals(bs)
    assert sum(iv.length_minutes for iv in ivs) == bs[-1]
    assert all(a.end == b.start and a.start < a.end for a, b in zip(ivs, ivs[1:]))
    rate = [{"totalWage": 60}] * len(ivs)
    assert total_wage(ivs, rate).exact == bs[-1]
