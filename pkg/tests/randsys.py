"""Random grammars and constraint systems for oracle comparisons."""

from __future__ import annotations

import itertools
import random

from otparse.constraints import (
    Constraint,
    ConstraintSystem,
    Fill,
    Forbid,
    OccupancyPattern,
    Parse,
    ProductionPattern,
    Ranking,
    Segment,
    Table,
    UnderparsePattern,
)
from otparse.grammar import PositionGrammar, Production, validate

NONTERMINALS = ["S", "A", "B", "D", "E"]
TERMINALS = ["x", "y"]
SEGMENTS = ["a", "b"]


def random_grammar(rng: random.Random) -> PositionGrammar:
    while True:
        n = rng.randint(2, 5)
        nts = NONTERMINALS[:n]
        inner = nts[1:]
        prods = []
        if rng.random() < 0.3:
            prods.append(Production("S", ()))
        for _ in range(rng.randint(1, 2)):
            prods.append(Production("S", tuple(rng.choice(inner) for _ in range(rng.randint(1, 3)))))
        for nt in inner:
            if rng.random() < 0.8:
                prods.append(Production(nt, (rng.choice(TERMINALS),)))
            for _ in range(rng.randint(0, 2)):
                prods.append(Production(nt, tuple(rng.choice(inner) for _ in range(rng.randint(1, 3)))))
        prods = list(dict.fromkeys(prods))
        g = PositionGrammar(tuple(prods), "S")
        if not validate(g):
            return g


def random_system(rng: random.Random, g: PositionGrammar) -> tuple[ConstraintSystem, Ranking]:
    cons = [Constraint("Parse", Parse())] + [Constraint(f"Fill^{t}", Fill(t)) for t in g.terminals]
    extra = 5 - len(cons)
    lhs_rhs = [(p.lhs, p.rhs) for p in g.productions if not p.is_terminal]
    terminal_prods = [p for p in g.productions if p.is_terminal]
    for k in range(rng.randint(0, extra)):
        kind = rng.random()
        if kind < 0.4:
            t = rng.choice(g.terminals)
            kind = Forbid(t, frozenset([rng.choice(SEGMENTS)]))
        elif kind < 0.7 and lhs_rhs:
            lhs, rhs = rng.choice(lhs_rhs)
            kind = Table(((ProductionPattern(lhs, rhs), rng.randint(1, 2)),))
        elif kind < 0.85 and terminal_prods:
            p = rng.choice(terminal_prods)
            kind = Table(((OccupancyPattern(p.lhs, p.rhs[0], "*"), 1),))
        else:
            kind = Table(((UnderparsePattern(frozenset([rng.choice(SEGMENTS)])), 1),))
        cons.append(Constraint(f"C{k}", kind))
    names = [c.name for c in cons]
    rng.shuffle(names)
    return ConstraintSystem([Segment(s, frozenset()) for s in SEGMENTS], cons), Ranking.total(names)


def random_instance(seed: int):
    rng = random.Random(seed)
    g = random_grammar(rng)
    system, ranking = random_system(rng, g)
    return g, system, ranking


def inputs_up_to(n: int) -> list[list[str]]:
    return [list(w) for k in range(n + 1) for w in itertools.product(SEGMENTS, repeat=k)]
