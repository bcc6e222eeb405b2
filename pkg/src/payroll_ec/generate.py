"""Random rulesets and scenarios for equivalence testing and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction

from .intervals import Arith, Compare, IntAnd, IntNot, Literal, Next, Prev, PropertyDecl, PropertyRule, PropRef, This
from .model import (ActionDecl, ActionKind, AfterTrigger, CountRule, DefinedRule, EffectRule, FluentDecl,
                    FluentKind, Ruleset, Scenario, WhenTrigger)
from .temporal import And, AtLeast, Atom, Exactly, Not

SYMBOLS = ("lo", "mid", "hi")


def _domain(rng: random.Random) -> tuple:
    if rng.random() < 0.6:
        return (False, True)
    return SYMBOLS[: rng.choice((2, 3))]


def _atom(rng, decl: FluentDecl) -> Atom:
    return Atom(decl.name, rng.choice(decl.domain))


def _condition(rng, pool: list[FluentDecl], durations: bool, step: int, max_parts: int = 2):
    parts = []
    for _ in range(rng.randint(1, max_parts)):
        a = _atom(rng, rng.choice(pool))
        r = rng.random()
        if durations and r < 0.25:
            op = AtLeast if rng.random() < 0.7 else Exactly
            a = op(step * rng.randint(1, 24), a)
        elif r < 0.4:
            a = Not(a)
        parts.append(a)
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def random_ruleset(rng: random.Random, horizon: int = 2880, step: int = 1) -> Ruleset:
    """A ruleset that is valid in changepoint mode.

    Every time, duration and threshold literal is a multiple of ``step``.
    """
    inertial = [FluentDecl(f"i{k}", FluentKind.INERTIAL, dom, rng.choice(dom), rng.random() < 0.5)
                for k, dom in enumerate(_domain(rng) for _ in range(rng.randint(2, 4)))]
    defined = []
    defined_rules = []
    for k in range(rng.randint(0, 2)):
        dom = _domain(rng)
        decl = FluentDecl(f"d{k}", FluentKind.DEFINED, dom, dom[0], rng.random() < 0.5)
        pool = inertial + defined
        first = _condition(rng, pool, durations=False, step=step)
        defined_rules.append(DefinedRule(decl.name, dom[-1], first))
        if rng.random() < 0.4:
            # a second rule, usually exclusive with the first
            cond = _condition(rng, pool, durations=False, step=step)
            if rng.random() < 0.9:
                parts = cond.parts if isinstance(cond, And) else (cond,)
                cond = And((Not(first), *parts))
            defined_rules.append(DefinedRule(decl.name, rng.choice(dom), cond))
        defined.append(decl)
    counts = []
    count_rules = []
    for k in range(rng.randint(0, 2)):
        decl = FluentDecl(f"c{k}", FluentKind.COUNT, (), 0, False)
        count_rules.append(CountRule(decl.name, _condition(rng, inertial + defined, False, step)))
        counts.append(decl)
    if not any(f.relevant for f in inertial + defined):
        inertial[0] = FluentDecl(inertial[0].name, FluentKind.INERTIAL, inertial[0].domain,
                                 inertial[0].initial, True)

    actions = [ActionDecl(f"u{k}", ActionKind.USER) for k in range(rng.randint(2, 4))]
    for k in range(rng.randint(0, 2)):
        times = sorted(rng.sample(range(0, horizon + 1, step), rng.randint(1, 3)))
        actions.append(ActionDecl(f"w{k}", ActionKind.WALLTIME, tuple(times)))
    triggers = []
    for k in range(rng.randint(1, 3)):
        name = f"t{k}"
        if counts and rng.random() < 0.4:
            triggers.append(WhenTrigger(rng.choice(counts).name, step * rng.randint(1, 120), name))
        else:
            f = rng.choice(inertial + defined)
            triggers.append(AfterTrigger(f.name, rng.choice(f.domain), step * rng.randint(1, 90), name))
        actions.append(ActionDecl(name, ActionKind.TRIGGERED))

    effects = []
    for a in actions:
        for f in rng.sample(inertial, rng.randint(1, 2)):
            cond = None
            if rng.random() < 0.35:
                cond = _condition(rng, inertial + defined, durations=True, step=step)
                if counts and rng.random() < 0.2:
                    parts = cond.parts if isinstance(cond, And) else (cond,)
                    cond = And((*parts, Not(Atom(rng.choice(counts).name, 0))))
            effects.append(EffectRule(a.name, f.name, rng.choice(f.domain), cond))

    relevant = [f for f in inertial + defined if f.relevant]
    decls, prules = _properties(rng, relevant)
    return Ruleset(tuple(inertial + defined + counts), tuple(actions), tuple(effects), tuple(triggers),
                   tuple(defined_rules), tuple(count_rules), tuple(decls), tuple(prules), horizon)


def _properties(rng, relevant: list[FluentDecl]):
    decls = [PropertyDecl("base", 0), PropertyDecl("premium", 0),
             PropertyDecl("totalWage", Arith("*", PropRef(This(), "base"),
                                              Arith("+", Literal(1), PropRef(This(), "premium"))))]
    rules = []
    rate = rng.choice((10, 15, 20, Fraction(45, 2)))
    for _ in range(rng.randint(1, 2)):
        f = rng.choice(relevant)
        rules.append(PropertyRule("base", Compare(PropRef(This(), f.name), "=", Literal(f.domain[-1])), rate))
    for _ in range(rng.randint(1, 2)):
        f = rng.choice(relevant)
        term = rng.choice((This(), Next(This()), Prev(This())))
        parts = [Compare(PropRef(term, f.name), "=", Literal(rng.choice(f.domain)))]
        if rng.random() < 0.5:
            parts.append(Compare(PropRef(This(), "length"), rng.choice(("<", ">=")),
                                 PropRef(rng.choice((Next(This()), Prev(This()))), "length")))
        if rng.random() < 0.3:
            parts.append(IntNot(Compare(PropRef(This(), "length"), "<", Literal(30))))
        cond = parts[0] if len(parts) == 1 else IntAnd(tuple(parts))
        # one premium value keeps overlapping rules unambiguous
        rules.append(PropertyRule("premium", cond, Fraction(1, 4)))
    return decls, rules


def random_scenario(rng: random.Random, rs: Ruleset, n_actions: int, step: int = 1) -> Scenario:
    users = [a.name for a in rs.actions if a.kind == ActionKind.USER]
    slots = range(0, rs.horizon + 1, step)
    times = rng.sample(slots, min(n_actions, len(slots)))
    return Scenario(tuple((rng.choice(users), t) for t in times))


def random_pair(seed: int, horizon: int = 2880, step: int = 1) -> tuple[Ruleset, Scenario]:
    rng = random.Random(seed)
    rs = random_ruleset(rng, horizon, step)
    return rs, random_scenario(rng, rs, rng.randint(0, 12), step)


def alternating_scenario(rs: Ruleset, n_actions: int, seed: int = 0, step: int = 1) -> Scenario:
    """User actions at ``n_actions`` distinct random minutes, cycling through the
    ruleset's user actions in declaration order (e.g. clock in, clock out)."""
    rng = random.Random(seed)
    users = [a.name for a in rs.actions if a.kind == ActionKind.USER]
    if not users:
        raise ValueError("ruleset declares no user actions")
    slots = range(step, rs.horizon, step)
    times = sorted(rng.sample(slots, min(n_actions, len(slots))))
    return Scenario(tuple((users[i % len(users)], t) for i, t in enumerate(times)))


def scenario_for_changepoints(rs: Ruleset, target: int, seed: int = 0, step: int = 1) -> tuple[Scenario, int]:
    """Alternating scenario whose changepoint run takes at most ``target`` steps.

    Returns the scenario and its actual advance count (the closest one not
    above ``target`` that the seed allows).
    """
    from .engine_changepoint import run_changepoint

    k = target
    while k >= 0:
        sc = alternating_scenario(rs, k, seed, step)
        _, cp = run_changepoint(rs, sc, step)
        if cp.advance_count <= target:
            return sc, cp.advance_count
        k -= max(1, (cp.advance_count - target) // 2)
    sc = Scenario()
    return sc, run_changepoint(rs, sc, step)[1].advance_count
