"""Interval segmentation, interval logic, defined properties and wages.

A finished timeline is cut into maximal half-open minute intervals
``[from, to)`` on which every relevant fluent is constant.  Interval formulas
compare values of the current, next or previous interval; defined properties
derive per-interval rates from them, and the wage is the exact sum of
``rate * length / 60`` rounded to cents at the very end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Any, Mapping, Sequence, Union

from .errors import AmbiguityError, EvaluationError, UnknownNameError

Value = Any
LENGTH = "length"


@dataclass(frozen=True)
class This:
    def offset(self) -> int:
        return 0


@dataclass(frozen=True)
class Next:
    sub: "IntervalTerm" = This()

    def offset(self) -> int:
        return self.sub.offset() + 1


@dataclass(frozen=True)
class Prev:
    sub: "IntervalTerm" = This()

    def offset(self) -> int:
        return self.sub.offset() - 1


IntervalTerm = Union[This, Next, Prev]


@dataclass(frozen=True)
class PropRef:
    """Value of ``prop`` (relevant fluent, property or ``length``) on ``term``."""

    term: IntervalTerm
    prop: str


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class Arith:
    op: str  # one of + - *
    lhs: "PropertyExpr"
    rhs: "PropertyExpr"


PropertyExpr = Union[PropRef, Literal, Arith]

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    lhs: Union[PropRef, Literal]
    op: str
    rhs: Union[PropRef, Literal]


@dataclass(frozen=True)
class IntAnd:
    parts: tuple


@dataclass(frozen=True)
class IntNot:
    sub: "IntervalFormula"


IntervalFormula = Union[Compare, IntAnd, IntNot]


@dataclass(frozen=True)
class PropertyDecl:
    """A defined interval property; ``default`` is a value or a ``PropertyExpr``."""

    name: str
    default: Any = 0


@dataclass(frozen=True)
class PropertyRule:
    property: str
    condition: IntervalFormula
    value: Value


@dataclass
class Interval:
    id: int
    start: int
    end: int
    relevant_values: dict = field(default_factory=dict)

    @property
    def length_minutes(self) -> int:
        return self.end - self.start


def expr_properties(e) -> set[str]:
    """Property names an expression default refers to."""
    if isinstance(e, PropRef):
        return {e.prop}
    if isinstance(e, Arith):
        return expr_properties(e.lhs) | expr_properties(e.rhs)
    return set()


def formula_props(phi: IntervalFormula) -> set[str]:
    if isinstance(phi, Compare):
        return {side.prop for side in (phi.lhs, phi.rhs) if isinstance(side, PropRef)}
    if isinstance(phi, IntAnd):
        out: set[str] = set()
        for p in phi.parts:
            out |= formula_props(p)
        return out
    return formula_props(phi.sub)


def boundaries(tl, relevant: Sequence[str]) -> list[int]:
    """Minutes at which some relevant fluent changes, plus 0 and the horizon.

    A value change at tick ``t`` of a granularity-``g`` timeline takes effect
    from minute ``t - g + 1``, the first minute of that tick's block.
    """
    g = tl.granularity
    points = {0, tl.horizon}
    for f in relevant:
        for t in tl.change_ticks(f):
            m = t - g + 1
            if m < tl.horizon:
                points.add(m)
    return sorted(points)


def build_intervals(bs: Sequence[int], tl=None, relevant: Sequence[str] | None = None) -> list[Interval]:
    """Intervals ``[bs[k], bs[k+1])`` with relevant values sampled at their start."""
    if relevant is None:
        relevant = tl.fluents if tl is not None else []
    out = []
    for k, (a, b) in enumerate(zip(bs, bs[1:])):
        vals = {f: tl.minute_value(f, a) for f in relevant} if tl is not None else {}
        out.append(Interval(k, a, b, vals))
    return out


def segment(tl, relevant: Sequence[str]) -> list[Interval]:
    return build_intervals(boundaries(tl, relevant), tl, relevant)


class _Resolver:
    """Memoised property evaluation across a list of intervals."""

    def __init__(self, ivs: Sequence[Interval], decls: Sequence[PropertyDecl],
                 rules: Sequence[PropertyRule]):
        self.ivs = ivs
        self.decls = {d.name: d for d in decls}
        self.rules: dict[str, list[PropertyRule]] = {d.name: [] for d in decls}
        for r in rules:
            if r.property not in self.rules:
                raise UnknownNameError(r.property, "property")
            self.rules[r.property].append(r)
        self.cache: dict[tuple[str, int], Value] = {}

    def prop(self, name: str, k: int) -> Value:
        key = (name, k)
        if key in self.cache:
            return self.cache[key]
        decl = self.decls.get(name)
        if decl is None:
            raise UnknownNameError(name, "property")
        chosen = _MISSING
        for r in self.rules[name]:
            if self.holds(r.condition, k):
                if chosen is _MISSING:
                    chosen = r.value
                elif not _same(chosen, r.value):
                    iv = self.ivs[k]
                    raise AmbiguityError(
                        f"property {name} has conflicting values {chosen!r} and {r.value!r} "
                        f"on interval [{iv.start},{iv.end})",
                        fluent=name, tick=iv.start, constraint="unique-rule")
        if chosen is _MISSING:
            chosen = self.expr(decl.default, k)
        self.cache[key] = chosen
        return chosen

    def ref(self, r: PropRef, k: int) -> Value:
        j = k + r.term.offset()
        if j < 0 or j >= len(self.ivs):
            return _MISSING
        iv = self.ivs[j]
        if r.prop == LENGTH:
            return iv.length_minutes
        if r.prop in iv.relevant_values:
            return iv.relevant_values[r.prop]
        if r.prop in self.decls:
            return self.prop(r.prop, j)
        raise UnknownNameError(r.prop, "property")

    def operand(self, side, k: int) -> Value:
        return side.value if isinstance(side, Literal) else self.ref(side, k)

    def holds(self, phi: IntervalFormula, k: int) -> bool:
        if isinstance(phi, Compare):
            a = self.operand(phi.lhs, k)
            b = self.operand(phi.rhs, k)
            if a is _MISSING or b is _MISSING:
                return False
            return compare(a, phi.op, b)
        if isinstance(phi, IntAnd):
            return all(self.holds(p, k) for p in phi.parts)
        if isinstance(phi, IntNot):
            return not self.holds(phi.sub, k)
        raise TypeError(f"not an interval formula: {phi!r}")

    def expr(self, e, k: int) -> Value:
        if isinstance(e, Literal):
            return e.value
        if isinstance(e, PropRef):
            v = self.ref(e, k)
            if v is _MISSING:
                raise EvaluationError(f"{e.prop} has no value on interval {k}")
            return v
        if isinstance(e, Arith):
            a, b = self.expr(e.lhs, k), self.expr(e.rhs, k)
            if not (_numeric(a) and _numeric(b)):
                raise EvaluationError(f"arithmetic on non-numeric values {a!r}, {b!r}")
            if e.op == "+":
                return _norm(Fraction(a) + Fraction(b))
            if e.op == "-":
                return _norm(Fraction(a) - Fraction(b))
            if e.op == "*":
                return _norm(Fraction(a) * Fraction(b))
            raise EvaluationError(f"unknown operator {e.op!r}")
        return e  # plain value default


class _Missing:
    def __repr__(self):
        return "<no value>"


_MISSING = _Missing()


def _numeric(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def _norm(v: Fraction):
    return int(v) if v.denominator == 1 else v


def _same(a, b) -> bool:
    return isinstance(a, bool) == isinstance(b, bool) and a == b


def compare(a: Value, op: str, b: Value) -> bool:
    if op == "=":
        return _same(a, b)
    if op == "!=":
        return not _same(a, b)
    if not (_numeric(a) and _numeric(b)):
        raise EvaluationError(f"cannot order {a!r} and {b!r}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise EvaluationError(f"unknown comparison {op!r}")


def int_holds(phi: IntervalFormula, k: int, ivs: Sequence[Interval],
              decls: Sequence[PropertyDecl] = (), rules: Sequence[PropertyRule] = ()) -> bool:
    """Whether ``phi`` holds on interval ``k``."""
    return _Resolver(ivs, decls, rules).holds(phi, k)


def eval_properties(ivs: Sequence[Interval], decls: Sequence[PropertyDecl],
                    rules: Sequence[PropertyRule]) -> list[dict[str, Value]]:
    """Per-interval value of every declared property."""
    res = _Resolver(ivs, decls, rules)
    return [{d.name: res.prop(d.name, k) for d in decls} for k in range(len(ivs))]


@dataclass(frozen=True)
class WageLine:
    interval: int
    start: int
    end: int
    rate: Fraction
    amount: Fraction


@dataclass(frozen=True)
class WageResult:
    total: Decimal
    exact: Fraction
    lines: tuple[WageLine, ...]

    def paid(self) -> list[WageLine]:
        return [ln for ln in self.lines if ln.amount]


def to_cents(x: Fraction) -> Decimal:
    """Round an exact amount to cents, ties to even."""
    return Decimal(round(Fraction(x) * 100)).scaleb(-2)


def total_wage(ivs: Sequence[Interval], props: Sequence[Mapping[str, Value]],
               wage_property: str = "totalWage") -> WageResult:
    """Sum of rate x hours over all intervals, exact until the final rounding."""
    lines = []
    exact = Fraction(0)
    for iv, p in zip(ivs, props):
        rate = p.get(wage_property, 0)
        if not _numeric(rate):
            raise EvaluationError(f"{wage_property} is not numeric on interval {iv.id}: {rate!r}")
        amount = Fraction(rate) * iv.length_minutes / 60
        exact += amount
        lines.append(WageLine(iv.id, iv.start, iv.end, Fraction(rate), amount))
    return WageResult(to_cents(exact), exact, tuple(lines))
