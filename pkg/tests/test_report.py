from dataclasses import replace
from decimal import Decimal

import pytest

from payroll_ec.report import compare_reports, diff, run


def test_to_dict_key_order(fixture):
    rs, sc = fixture
    d = run(rs, sc, "changepoint").to_dict()
    assert list(d) == ["engine", "granularity", "horizon", "happenings", "fired_triggers", "changepoints",
                       "steps", "intervals", "total_wage", "total_wage_exact", "wall_ms"]
    assert "wall_ms" not in run(rs, sc).to_dict(timing=False)
    assert list(d["intervals"][0]) == ["id", "from", "to", "length", "values", "properties", "rate", "wage"]


def test_total_is_exact_sum_of_lines(fixture):
    rs, sc = fixture
    rep = run(rs, sc)
    assert rep.wage.exact == sum(ln.amount for ln in rep.wage.lines)
    assert rep.total == Decimal("191.00")
    d = rep.to_dict()
    assert d["total_wage_exact"] == "191"
    assert [iv["wage"] for iv in d["intervals"] if iv["wage"] != "0"] == ["40", "110", "12", "29"]


def test_unknown_mode(fixture):
    with pytest.raises(ValueError):
        run(*fixture, mode="magic")


def test_compare_reports_flags_total_difference(fixture):
    rs, sc = fixture
    a = run(rs, sc)
    b = run(rs, sc, "changepoint")
    assert compare_reports(a, b).equivalent
    cheaper = rs.replace(property_decls=tuple(
        replace(d, default=15) if d.name == "normalwage" else d for d in rs.property_decls))
    c = run(cheaper, sc, "changepoint")
    result = compare_reports(a, c)
    assert not result.equivalent and "differ" in result.detail


def test_diff_agrees_on_shared_error(fixture):
    rs, sc = fixture
    clash = sc.__class__(sc.user_actions + (("clockOut", 825),))
    result = diff(rs, clash)
    assert result.equivalent and "both engines report" in result.detail
