"""Table-document reader and canonical writer.

A document is a sequence of tables::

    table walltime_actions
    action   | time
    nightfall| 22h00

Cells are separated by ``|`` and trimmed, ``#`` starts a comment, blank lines
separate tables.  See ``grammar.ebnf`` for the cell-level grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import ParseError
from .intervals import (COMPARE_OPS, Arith, Compare, IntAnd, IntervalFormula, IntNot, Literal, Next,
                        Prev, PropertyDecl, PropertyRule, PropRef, This)
from .model import (DEFAULT_HORIZON, ActionDecl, ActionKind, AfterTrigger, CountRule, DefinedRule,
                    EffectRule, FluentDecl, FluentKind, Ruleset, Scenario, WhenTrigger, dhm_from_stamp,
                    normalize_value, stamp_from_dhm)
from .temporal import And, AtLeast, Atom, Exactly, Formula, Not

TABLES = {
    "inertial_fluents": ("name", "domain", "initial", "relevant"),
    "defined_fluents": ("name", "default", "relevant"),
    "defined_fluent_rules": ("fluent", "condition", "value"),
    "count_fluents": ("name", "condition"),
    "action_effects": ("action", "fluent", "value"),
    "conditional_effects": ("action", "condition", "fluent", "value"),
    "walltime_actions": ("action", "time"),
    "triggered_actions": ("action", "trigger"),
    "defined_properties": ("name", "default"),
    "defined_property_rules": ("property", "condition", "value"),
    "user_actions": ("action", "time"),
}

# ---------------------------------------------------------------- lexing

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<time>\d+d\d+h\d+|\d+h\d+)
  | (?P<num>\d+\.\d+|\d+/\d+|\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>!=|<=|>=|[=<>()\[\]{},+\-*])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str  # time | num | ident | op | end
    text: str
    col: int  # 0-based offset within the cell


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


_TIME = re.compile(r"(?:(\d+)d)?(\d+)h(\d+)\Z")


def parse_duration(text: str) -> int:
    """``[Nd]HhMM`` as a number of minutes; hours are not capped."""
    m = _TIME.match(text.strip())
    if not m or len(m.group(3)) != 2:
        raise ParseError(f"malformed duration {text.strip()!r}", 1, 1)
    days, hours, minutes = int(m.group(1) or 0), int(m.group(2)), int(m.group(3))
    if minutes > 59:
        raise ParseError(f"minutes out of range in {text.strip()!r}", 1, 1)
    return (days * 24 + hours) * 60 + minutes


def parse_time(text: str) -> int:
    """``[Nd]HHhMM`` as minutes since the start of day 0."""
    m = _TIME.match(text.strip())
    if not m or len(m.group(3)) != 2 or len(m.group(2)) > 2:
        raise ParseError(f"malformed time {text.strip()!r}", 1, 1)
    days, hours, minutes = int(m.group(1) or 0), int(m.group(2)), int(m.group(3))
    if hours > 23 or minutes > 59:
        raise ParseError(f"time of day out of range in {text.strip()!r}", 1, 1)
    return stamp_from_dhm(days, hours, minutes)


def _number(text: str):
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ZeroDivisionError
        return normalize_value(Fraction(int(num), int(den)))
    if "." in text:
        return normalize_value(Fraction(text))
    return int(text)


class _Parser:
    """Recursive descent over one cell's tokens."""

    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of cell" if tok.kind == "end" else repr(tok.text)
        raise ParseError(f"{msg}, found {found}", 1, tok.col + 1)

    def take(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.take()

    def done(self):
        if self.tok.kind != "end":
            self.fail("unexpected trailing input")

    def ident(self, what="identifier") -> str:
        if self.tok.kind != "ident" or self.tok.text in ("and", "not", "since"):
            self.fail(f"expected {what}")
        return self.take().text

    def value(self):
        t = self.tok
        if t.kind == "time":
            self.take()
            try:
                return parse_duration(t.text)
            except ParseError as exc:
                raise ParseError(exc.message, 1, t.col + 1) from None
        if t.kind == "num":
            self.take()
            try:
                return _number(t.text)
            except ZeroDivisionError:
                raise ParseError("zero denominator", 1, t.col + 1) from None
        if t.kind == "ident" and t.text not in ("and", "not", "since", "length"):
            self.take()
            return {"true": True, "false": False}.get(t.text, t.text)
        self.fail("expected a value")

    def duration(self) -> int:
        t = self.tok
        if t.kind == "time":
            return self.value()
        if t.kind == "num" and t.text.isdigit():
            self.take()
            return int(t.text)
        self.fail("expected a duration")

    # temporal conditions: cond := term ('and' term)*
    def cond(self, since_kind) -> Formula:
        parts = [self.term(since_kind)]
        while self.at("and"):
            self.take()
            parts.append(self.term(since_kind))
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def term(self, since_kind) -> Formula:
        if self.at("not"):
            self.take()
            self.expect("(")
            sub = self.cond(since_kind)
            self.expect(")")
            return Not(sub)
        f = self.ident("fluent name")
        self.expect("=")
        atom = Atom(f, self.value())
        if self.at("since"):
            self.take()
            d = self.duration()
            if d <= 0:
                self.fail("duration must be positive", self.toks[self.i - 1])
            return since_kind(d, atom)
        return atom

    # interval conditions
    def icond(self) -> IntervalFormula:
        parts = [self.iatom()]
        while self.at("and"):
            self.take()
            parts.append(self.iatom())
        return parts[0] if len(parts) == 1 else IntAnd(tuple(parts))

    def iatom(self) -> IntervalFormula:
        if self.at("not"):
            self.take()
            self.expect("(")
            sub = self.icond()
            self.expect(")")
            return IntNot(sub)
        lhs = self.propref(bare_is_ref=True)
        if not (self.tok.kind == "op" and self.tok.text in COMPARE_OPS):
            self.fail("expected a comparison operator")
        op = self.take().text
        if self.at("[") or self.at("length"):
            rhs = self.propref(bare_is_ref=True)
        else:
            rhs = Literal(self.value())
        return Compare(lhs, op, rhs)

    def propref(self, bare_is_ref: bool) -> PropRef:
        steps = []
        while self.at("["):
            self.take()
            word = self.tok
            if word.text not in ("this", "next", "prev"):
                self.fail("expected this, next or prev")
            steps.append(self.take().text)
            self.expect("]")
        if self.at("length"):
            self.take()
            name = "length"
        else:
            name = self.ident("property name")
        term = This()
        for s in reversed(steps):
            term = {"this": lambda x: x, "next": Next, "prev": Prev}[s](term)
        return PropRef(term, name)

    # property expressions: sum := prod (('+'|'-') prod)*
    def expr(self):
        node = self.prod()
        while self.at("+") or self.at("-"):
            op = self.take().text
            node = Arith(op, node, self.prod())
        return node

    def prod(self):
        node = self.factor()
        while self.at("*"):
            self.take()
            node = Arith("*", node, self.factor())
        return node

    def factor(self):
        if self.at("("):
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if self.tok.kind == "num":
            return Literal(self.value())
        if self.tok.kind == "ident" and self.tok.text not in ("and", "not", "since"):
            return PropRef(This(), self.take().text)
        self.fail("expected a number, property name or '('")


def _whole(text: str, method: str, *args):
    p = _Parser(text)
    out = getattr(p, method)(*args)
    p.done()
    return out


def parse_condition(text: str, trigger: bool = False) -> Formula:
    """Temporal condition; ``since`` means at-least, or exactly when ``trigger``."""
    return _whole(text, "cond", Exactly if trigger else AtLeast)


def parse_interval_condition(text: str) -> IntervalFormula:
    return _whole(text, "icond")


def parse_property_expr(text: str):
    """``= expr`` (or just ``expr``) as an arithmetic tree."""
    s = text.strip()
    offset = len(text) - len(text.lstrip())
    if s.startswith("="):
        body = s[1:]
        try:
            return _whole(body, "expr")
        except ParseError as exc:
            raise ParseError(exc.message, 1, exc.column + offset + 1) from None
    return _whole(text, "expr")


def parse_value(text: str):
    return _whole(text, "value")


def parse_trigger(text: str, action: str):
    """``f=v since D`` gives an AfterTrigger, ``cf=N`` a WhenTrigger."""
    phi = parse_condition(text, trigger=True)
    if isinstance(phi, Exactly) and isinstance(phi.sub, Atom):
        return AfterTrigger(phi.sub.fluent, phi.sub.value, phi.minutes, action)
    if isinstance(phi, Atom):
        v = phi.value
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError("count threshold must be a duration or integer", 1,
                             text.find("=") + 2)
        return WhenTrigger(phi.fluent, v, action)
    raise ParseError("trigger must be 'f=v since D' or 'count=threshold'", 1, 1)


# ---------------------------------------------------------------- documents


@dataclass
class Table:
    name: str
    line: int
    header: list[str]
    rows: list[list[tuple[str, int, int]]] = field(default_factory=list)  # (cell, line, col)


def _split_cells(raw: str, lineno: int) -> list[tuple[str, int, int]]:
    cells = []
    start = 0
    for part in raw.split("|"):
        lead = len(part) - len(part.lstrip())
        cells.append((part.strip(), lineno, start + lead + 1))
        start += len(part) + 1
    return cells


def read_tables(text: str) -> list[Table]:
    tables: list[Table] = []
    cur: Table | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            cur = None
            continue
        if cur is None:
            head = line.split()
            if head[0] != "table" or len(head) != 2:
                raise ParseError("expected 'table <name>'", lineno, len(line) - len(line.lstrip()) + 1)
            name = head[1]
            if name not in TABLES:
                raise ParseError(f"unknown table {name!r}", lineno, line.index(name) + 1)
            if any(t.name == name for t in tables):
                raise ParseError(f"table {name!r} appears twice", lineno, line.index(name) + 1)
            cur = Table(name, lineno, [])
            tables.append(cur)
            continue
        cells = _split_cells(line, lineno)
        if not cur.header:
            got = tuple(c for c, _, _ in cells)
            if got != TABLES[cur.name]:
                raise ParseError(f"header of {cur.name} must be {' | '.join(TABLES[cur.name])}",
                                 lineno, cells[0][2])
            cur.header = list(got)
            continue
        if len(cells) != len(cur.header):
            # point at the first surplus cell, or just past the row if cells are missing
            col = cells[len(cur.header)][2] if len(cells) > len(cur.header) else len(line) + 1
            raise ParseError(f"row has {len(cells)} cells, {cur.name} needs {len(cur.header)}",
                             lineno, col)
        for c, ln, col in cells:
            if not c:
                raise ParseError("empty cell", ln, col)
        cur.rows.append(cells)
    for t in tables:
        if not t.header:
            raise ParseError(f"table {t.name} has no header row", t.line, 1)
    return tables


def _cell(fn, cell, *args):
    text, line, col = cell
    try:
        return fn(text, *args)
    except ParseError as exc:
        raise ParseError(exc.message, line, col + exc.column - 1) from None


def _ident_cell(cell) -> str:
    text, line, col = cell
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", text):
        raise ParseError(f"expected an identifier, found {text!r}", line, col)
    return text


def _flag(cell) -> bool:
    text, line, col = cell
    if text in ("yes", "true"):
        return True
    if text in ("no", "false"):
        return False
    raise ParseError(f"expected yes or no, found {text!r}", line, col)


def _domain(cell) -> tuple:
    text, line, col = cell
    if text == "bool":
        return (False, True)
    if not (text.startswith("{") and text.endswith("}")):
        raise ParseError("domain must be 'bool' or '{v1, v2, ...}'", line, col)
    inner = text[1:-1]
    values = []
    offset = 1
    for part in inner.split(","):
        lead = len(part) - len(part.lstrip())
        if not part.strip():
            raise ParseError("empty domain element", line, col + offset)
        values.append(_cell(parse_value, (part.strip(), line, col + offset + lead)))
        offset += len(part) + 1
    return tuple(dict.fromkeys(values))


def parse_document(text: str, horizon: int = DEFAULT_HORIZON,
                   wage_property: str = "totalWage") -> tuple[Ruleset, Scenario]:
    """Parse a table document into a ruleset and a scenario."""
    tables = {t.name: t for t in read_tables(text)}

    def rows(name):
        return tables[name].rows if name in tables else []

    fluents: list[FluentDecl] = []
    for name, dom, init, rel in rows("inertial_fluents"):
        domain = _domain(dom)
        fluents.append(FluentDecl(_ident_cell(name), FluentKind.INERTIAL, domain,
                                  _cell(parse_value, init), _flag(rel)))

    defined_rules = []
    for fl, cond, val in rows("defined_fluent_rules"):
        defined_rules.append(DefinedRule(_ident_cell(fl), _cell(parse_value, val),
                                         _cell(parse_condition, cond)))
    for name, default, rel in rows("defined_fluents"):
        fname = _ident_cell(name)
        dflt = _cell(parse_value, default)
        if isinstance(dflt, bool):
            domain = (False, True)
        else:
            domain = tuple(dict.fromkeys([dflt] + [r.value for r in defined_rules if r.fluent == fname]))
        fluents.append(FluentDecl(fname, FluentKind.DEFINED, domain, dflt, _flag(rel)))

    count_rules = []
    for name, cond in rows("count_fluents"):
        fname = _ident_cell(name)
        fluents.append(FluentDecl(fname, FluentKind.COUNT, (), 0, False))
        count_rules.append(CountRule(fname, _cell(parse_condition, cond)))

    effects = []
    for act, fl, val in rows("action_effects"):
        effects.append(EffectRule(_ident_cell(act), _ident_cell(fl), _cell(parse_value, val)))
    for act, cond, fl, val in rows("conditional_effects"):
        effects.append(EffectRule(_ident_cell(act), _ident_cell(fl), _cell(parse_value, val),
                                  _cell(parse_condition, cond)))

    schedules: dict[str, list[int]] = {}
    for act, tm in rows("walltime_actions"):
        schedules.setdefault(_ident_cell(act), []).append(_cell(parse_time, tm))
    triggers = []
    for act, trig in rows("triggered_actions"):
        triggers.append(_cell(parse_trigger, trig, _ident_cell(act)))

    actions: dict[str, ActionDecl] = {}
    for name, times in schedules.items():
        actions[name] = ActionDecl(name, ActionKind.WALLTIME, tuple(sorted(times)))
    for tr in triggers:
        actions.setdefault(tr.action, ActionDecl(tr.action, ActionKind.TRIGGERED))
    user_actions = [(_ident_cell(act), _cell(parse_time, tm)) for act, tm in rows("user_actions")]
    for name in [e.action for e in effects] + [a for a, _ in user_actions]:
        actions.setdefault(name, ActionDecl(name, ActionKind.USER))

    decls = []
    for name, default in rows("defined_properties"):
        text = default[0]
        if text.startswith("="):
            d = _cell(parse_property_expr, default)
        else:
            d = _cell(parse_value, default)
        decls.append(PropertyDecl(_ident_cell(name), d))
    prules = []
    for prop, cond, val in rows("defined_property_rules"):
        prules.append(PropertyRule(_ident_cell(prop), _cell(parse_interval_condition, cond),
                                   _cell(parse_value, val)))

    rs = Ruleset(tuple(fluents), tuple(actions.values()), tuple(effects), tuple(triggers),
                 tuple(defined_rules), tuple(count_rules), tuple(decls), tuple(prules),
                 horizon, wage_property)
    return rs, Scenario(tuple(user_actions))


def parse_scenario(text: str) -> Scenario:
    """A document holding only a ``user_actions`` table."""
    tables = read_tables(text)
    for t in tables:
        if t.name != "user_actions":
            raise ParseError(f"scenario files may only contain user_actions, found {t.name}", t.line, 7)
    _, sc = parse_document(text)
    return sc


# ---------------------------------------------------------------- rendering


def render_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        den, k = v.denominator, 0
        while den % 2 == 0 or den % 5 == 0:
            den //= 2 if den % 2 == 0 else 5
            k += 1
        if den != 1:
            return f"{v.numerator}/{v.denominator}"
        scaled = v * 10 ** k
        sign = "-" if scaled < 0 else ""
        digits = str(abs(int(scaled))).rjust(k + 1, "0")
        return f"{sign}{digits[:-k]}.{digits[-k:]}"
    return str(v)


def render_time(t: int) -> str:
    d, h, m = dhm_from_stamp(t)
    return f"{d}d{h}h{m:02d}" if d else f"{h}h{m:02d}"


def render_duration(n: int) -> str:
    return f"{n // 60}h{n % 60:02d}"


def render_condition(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return f"{phi.fluent}={render_value(phi.value)}"
    if isinstance(phi, And):
        return " and ".join(render_condition(p) for p in phi.parts)
    if isinstance(phi, Not):
        return f"not ({render_condition(phi.sub)})"
    if isinstance(phi, (AtLeast, Exactly)) and isinstance(phi.sub, Atom):
        return f"{render_condition(phi.sub)} since {render_duration(phi.minutes)}"
    raise ValueError(f"condition has no table syntax: {phi!r}")


def _render_term(term) -> str:
    out = ""
    while not isinstance(term, This):
        out += "[next]" if isinstance(term, Next) else "[prev]"
        term = term.sub
    return out


def _render_operand(side, lhs: bool) -> str:
    if isinstance(side, Literal):
        return render_value(side.value)
    prefix = _render_term(side.term)
    if not prefix and not lhs and side.prop != "length":
        prefix = "[this]"
    return prefix + side.prop


def render_interval_condition(phi: IntervalFormula) -> str:
    if isinstance(phi, Compare):
        return f"{_render_operand(phi.lhs, True)} {phi.op} {_render_operand(phi.rhs, False)}"
    if isinstance(phi, IntAnd):
        return " and ".join(render_interval_condition(p) for p in phi.parts)
    return f"not ({render_interval_condition(phi.sub)})"


_PREC = {"+": 1, "-": 1, "*": 2}


def render_expr(e, parent: int = 0, right: bool = False) -> str:
    if isinstance(e, Literal):
        return render_value(e.value)
    if isinstance(e, PropRef):
        return e.prop
    p = _PREC[e.op]
    s = f"{render_expr(e.lhs, p)} {e.op} {render_expr(e.rhs, p, True)}"
    if p < parent or (right and p == parent):
        s = f"({s})"
    return s


def _table(name: str, rows: list[list[str]]) -> str:
    if not rows:
        return ""
    lines = [f"table {name}", " | ".join(TABLES[name])]
    lines += [" | ".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def render_document(rs: Ruleset, sc: Scenario | None = None) -> str:
    """Canonical table text; ``parse_document`` of it reproduces the input."""
    def dom(f):
        if f.domain == (False, True):
            return "bool"
        return "{" + ", ".join(render_value(v) for v in f.domain) + "}"

    def yes(b):
        return "yes" if b else "no"

    parts = [
        _table("inertial_fluents", [[f.name, dom(f), render_value(f.initial), yes(f.relevant)]
                                    for f in rs.fluents if f.kind == FluentKind.INERTIAL]),
        _table("defined_fluents", [[f.name, render_value(f.initial), yes(f.relevant)]
                                   for f in rs.fluents if f.kind == FluentKind.DEFINED]),
        _table("defined_fluent_rules", [[r.fluent, render_condition(r.condition), render_value(r.value)]
                                        for r in rs.defined_rules]),
        _table("count_fluents", [[r.count_fluent, render_condition(r.condition)]
                                 for r in rs.count_rules]),
        _table("action_effects", [[e.action, e.fluent, render_value(e.value)]
                                  for e in rs.effects if e.condition is None]),
        _table("conditional_effects", [[e.action, render_condition(e.condition), e.fluent,
                                        render_value(e.value)]
                                       for e in rs.effects if e.condition is not None]),
        _table("walltime_actions", [[a.name, render_time(t)] for a in rs.actions for t in a.schedule]),
        _table("triggered_actions", [[tr.action, _render_trigger(tr)] for tr in rs.triggers]),
        _table("defined_properties", [[d.name, _render_default(d.default)] for d in rs.property_decls]),
        _table("defined_property_rules", [[r.property, render_interval_condition(r.condition),
                                           render_value(r.value)] for r in rs.property_rules]),
    ]
    if sc is not None:
        parts.append(_table("user_actions", [[a, render_time(t)] for a, t in sc.user_actions]))
    return "\n".join(p for p in parts if p)


def render_scenario(sc: Scenario) -> str:
    """A ``user_actions`` table; an empty scenario gives an empty document."""
    return _table("user_actions", [[a, render_time(t)] for a, t in sc.user_actions])


def _render_trigger(tr) -> str:
    if isinstance(tr, AfterTrigger):
        return f"{tr.fluent}={render_value(tr.value)} since {render_duration(tr.minutes)}"
    return f"{tr.count_fluent}={render_duration(tr.threshold)}"


def _render_default(d) -> str:
    if isinstance(d, (Arith, PropRef, Literal)):
        return "= " + render_expr(d)
    return render_value(d)
