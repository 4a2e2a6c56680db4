"""Brute-force candidate enumeration, for checking the chart parser on small inputs.

Nothing here touches the chart.  Candidates are trees of the position
grammar together with an order-preserving matching of input segments into
positions.  Segments left unmatched are underparsed.  Enumeration is made
finite by a bound on the number of unfilled positions.  An epsilon subtree
below the root also counts against that bound (a bare root epsilon does
not), and unary chains never repeat a category.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .chart import (
    Node,
    PartialDescription,
    Position,
    Underparsed,
    fringe,
    local_regions,
    strip_underparsed,
    surface_form,
)
from .constraints import (
    EMPTY,
    ConstraintSystem,
    MarkVector,
    OccupancyRegion,
    ProductionRegion,
    Ranking,
    UnderparseRegion,
)
from .grammar import PositionGrammar, derive_categories, nonterminal

MAX_INPUT = 8
MAX_TYPOLOGY_CONSTRAINTS = 6


class InstanceTooLargeError(ValueError):
    pass


def default_bound(length: int, grammar: PositionGrammar) -> int:
    return length + 2 * len(derive_categories(grammar))


def evaluate_global(d: PartialDescription | Iterable, system: ConstraintSystem) -> MarkVector:
    """Sum of marks over every local region of a description."""
    items = d.items if isinstance(d, PartialDescription) else d
    total = EMPTY
    for region in local_regions(items):
        total = total + system.assess(region)
    return total


class _Search:
    """Depth-first generation of every candidate, left to right through the input."""

    def __init__(self, grammar: PositionGrammar, segments: Sequence[str], bound: int):
        _guard(segments, bound)
        self.grammar = grammar
        self.segments = list(segments)
        self.J = len(segments)
        self.bound = bound
        self.prods = {nt: grammar.productions_for(nt) for nt in grammar.nonterminals}
        self.min_units = _min_units(grammar)

    def nodes(self, cat: str, i: int, budget: int, chain: frozenset, owed: int, root: bool = False):
        # owed: units the pending right context still needs, so left recursion stays finite
        for prod in self.prods[cat]:
            if prod.is_epsilon:
                if root:
                    yield Node(cat, ()), i, budget
                elif budget >= 1:
                    yield Node(cat, ()), i, budget - 1
            elif prod.is_terminal:
                x = prod.rhs[0]
                for k in range(i, self.J):
                    under = tuple(Underparsed(self.segments[u], u + 1) for u in range(i, k))
                    yield Node(cat, under + (Position(x, self.segments[k], k + 1),)), k + 1, budget
                if budget >= 1:
                    yield Node(cat, (Position(x),)), i, budget - 1
            else:
                if prod.is_unary:
                    inner = chain | {cat}
                    if prod.rhs[0] in inner:
                        continue
                else:
                    inner = frozenset()
                for kids, j, b in self.sequences(prod.rhs, i, budget, inner, owed):
                    yield Node(cat, kids), j, b

    def sequences(self, cats: Sequence[str], i: int, budget: int, chain: frozenset, owed: int):
        if not cats:
            yield (), i, budget
            return
        need = sum(self.min_units[c] for c in cats)
        if need + owed > (self.J - i) + budget:
            return
        rest = tuple(cats[1:])
        rest_need = need - self.min_units[cats[0]]
        for node, j, b in self.nodes(cats[0], i, budget, chain, owed + rest_need):
            for tail, k, b2 in self.sequences(rest, j, b, frozenset(), owed):
                yield (node,) + tail, k, b2

    def candidates(self) -> Iterator[PartialDescription]:
        start = self.grammar.start
        cat = nonterminal(start)
        lo, hi = (1, self.J) if self.J else (None, None)
        for tree, i, _ in self.nodes(start, 0, self.bound, frozenset(), 0, root=True):
            trailing = tuple(Underparsed(self.segments[u], u + 1) for u in range(i, self.J))
            yield PartialDescription((tree,) + trailing, cat, lo, hi)


class _Exhaustive:
    """Best subtrees by category, exact input span and exact unfilled count.

    Works top-down from the start symbol.  Every tree the enumerator above
    can produce is accounted for; a table entry keeps all subtrees of least
    cost, and since costs add up over disjoint parts, an optimal candidate
    only ever uses least-cost parts.  Spans are 0-based ``[i, j)``;
    underparsed segments hang off the next filled position or trail the tree.
    """

    def __init__(self, grammar, segments, bound, system, ranking):
        _guard(segments, bound)
        self.grammar = grammar
        self.segments = list(segments)
        self.J = len(segments)
        self.bound = bound
        self.system = system
        self.ranking = ranking
        self.prods = {nt: grammar.productions_for(nt) for nt in grammar.nonterminals}
        self.min_units = _min_units(grammar)
        self._costs: dict = {}
        self._nodes: dict = {}
        self._seqs: dict = {}

    def cost(self, region) -> tuple:
        c = self._costs.get(region)
        if c is None:
            c = self._costs[region] = self.ranking.key(self.system.assess(region))
        return c

    def skipped(self, i: int, k: int) -> tuple:
        total = tuple(0 for _ in self.ranking.strata)
        for u in range(i, k):
            total = _add(total, self.cost(UnderparseRegion(self.segments[u])))
        return total

    def node(self, cat: str, i: int, j: int, u: int, chain: frozenset, root: bool = False):
        key = (cat, i, j, u, chain, root)
        hit = self._nodes.get(key)
        if hit is not None:
            return hit
        best, alts = None, []

        def consider(c, alt):
            nonlocal best, alts
            if best is None or c < best:
                best, alts = c, [alt]
            elif c == best:
                alts.append(alt)

        for prod in self.prods[cat]:
            if prod.is_epsilon:
                if i == j and u == (0 if root else 1):
                    consider(self.cost(ProductionRegion(cat, ())), ("eps",))
            elif prod.is_terminal:
                x = prod.rhs[0]
                if u == 0 and j > i:
                    c = _add(self.skipped(i, j - 1), self.cost(OccupancyRegion(cat, x, self.segments[j - 1])))
                    consider(c, ("fill", x))
                if u == 1 and i == j:
                    consider(self.cost(OccupancyRegion(cat, x, None)), ("unf", x))
            else:
                if prod.is_unary:
                    inner = chain | {cat}
                    if prod.rhs[0] in inner:
                        continue
                else:
                    inner = frozenset()
                c = self.seq(prod.rhs, i, j, u, inner)[0]
                if c is not None:
                    consider(_add(self.cost(ProductionRegion(cat, prod.rhs)), c), ("prod", prod.rhs, inner))
        hit = self._nodes[key] = (best, alts)
        return hit

    def seq(self, cats: tuple, i: int, j: int, u: int, chain: frozenset):
        if len(cats) == 1:
            return self.node(cats[0], i, j, u, chain)
        key = (cats, i, j, u, chain)
        hit = self._seqs.get(key)
        if hit is not None:
            return hit
        best, alts = None, []
        first, rest = cats[0], cats[1:]
        need_first = self.min_units[first]
        need_rest = sum(self.min_units[c] for c in rest)
        for k in range(i, j + 1):
            for u1 in range(u + 1):
                if (k - i) + u1 < need_first or (j - k) + (u - u1) < need_rest:
                    continue
                left = self.node(first, i, k, u1, chain)[0]
                if left is None:
                    continue
                right = self.seq(rest, k, j, u - u1, frozenset())[0]
                if right is None:
                    continue
                c = _add(left, right)
                if best is None or c < best:
                    best, alts = c, [(k, u1)]
                elif c == best:
                    alts.append((k, u1))
        hit = self._seqs[key] = (best, alts)
        return hit

    def trees(self, cat, i, j, u, chain, root=False) -> Iterator[Node]:
        for alt in self.node(cat, i, j, u, chain, root)[1]:
            if alt[0] == "eps":
                yield Node(cat, ())
            elif alt[0] == "fill":
                under = tuple(Underparsed(self.segments[v], v + 1) for v in range(i, j - 1))
                yield Node(cat, under + (Position(alt[1], self.segments[j - 1], j),))
            elif alt[0] == "unf":
                yield Node(cat, (Position(alt[1]),))
            else:
                for kids in self.kids(alt[1], i, j, u, alt[2]):
                    yield Node(cat, kids)

    def kids(self, cats, i, j, u, chain) -> Iterator[tuple]:
        if len(cats) == 1:
            for t in self.trees(cats[0], i, j, u, chain):
                yield (t,)
            return
        for k, u1 in self.seq(cats, i, j, u, chain)[1]:
            for head in self.trees(cats[0], i, k, u1, chain):
                for tail in self.kids(cats[1:], k, j, u - u1, frozenset()):
                    yield (head,) + tail

    def solve(self) -> tuple[tuple | None, list[PartialDescription]]:
        start = self.grammar.start
        best, tops = None, []
        for k in range(self.J + 1):
            trail = self.skipped(k, self.J)
            for u in range(self.bound + 1):
                c = self.node(start, 0, k, u, frozenset(), True)[0]
                if c is None:
                    continue
                c = _add(c, trail)
                if best is None or c < best:
                    best, tops = c, [(k, u)]
                elif c == best:
                    tops.append((k, u))
        cat = nonterminal(start)
        lo, hi = (1, self.J) if self.J else (None, None)
        out = []
        for k, u in tops:
            trailing = tuple(Underparsed(self.segments[v], v + 1) for v in range(k, self.J))
            for tree in self.trees(start, 0, k, u, frozenset(), True):
                out.append(PartialDescription((tree,) + trailing, cat, lo, hi))
        return best, out


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _guard(segments, bound):
    if len(segments) > MAX_INPUT:
        raise InstanceTooLargeError(f"input of length {len(segments)} exceeds oracle limit {MAX_INPUT}")
    if bound < 0:
        raise ValueError("bound must be non-negative")


def _min_units(grammar: PositionGrammar) -> dict[str, int]:
    """Fewest positions (+ epsilon leaves) any tree rooted in each nonterminal has."""
    inf = float("inf")
    best = {nt: inf for nt in grammar.nonterminals}
    changed = True
    while changed:
        changed = False
        for p in grammar.productions:
            if p.is_epsilon or p.is_terminal:
                cost = 1
            else:
                cost = sum(best[s] for s in p.rhs)
            if cost < best[p.lhs]:
                best[p.lhs] = cost
                changed = True
    return best


def enumerate_candidates(
    segments: Sequence[str],
    grammar: PositionGrammar,
    bound: int,
    system: ConstraintSystem | None = None,
) -> list[PartialDescription]:
    """Every candidate with at most ``bound`` unfilled positions (marks filled in if ``system`` given)."""
    out = []
    for d in _Search(grammar, segments, bound).candidates():
        if system is not None:
            d = PartialDescription(d.items, d.category, d.start, d.end, evaluate_global(d, system))
        out.append(d)
    return out


def oracle_best(
    segments: Sequence[str],
    grammar: PositionGrammar,
    system: ConstraintSystem,
    ranking: Ranking,
    bound: int | None = None,
) -> tuple[MarkVector | None, list[PartialDescription]]:
    """Optimal marks and every co-optimal candidate within the bound.

    Agrees with scoring the whole of ``enumerate_candidates`` and keeping the
    minima, but shares work between candidates with common subtrees.
    """
    if bound is None:
        bound = default_bound(len(segments), grammar)
    _, winners = _Exhaustive(grammar, segments, bound, system, ranking).solve()
    if not winners:
        return None, []
    scored = [PartialDescription(d.items, d.category, d.start, d.end, evaluate_global(d, system)) for d in winners]
    return scored[0].marks, scored


def oracle_best_naive(
    segments: Sequence[str],
    grammar: PositionGrammar,
    system: ConstraintSystem,
    ranking: Ranking,
    bound: int,
) -> tuple[MarkVector | None, list[PartialDescription]]:
    """Score every enumerated candidate; only usable for tiny bounds."""
    best, winners = None, []
    for d in enumerate_candidates(segments, grammar, bound, system):
        k = ranking.key(d.marks)
        if best is None or k < best:
            best, winners = k, [d]
        elif k == best:
            winners.append(d)
    return (winners[0].marks if winners else None), winners


# -- candidate checks --------------------------------------------------------


def canonical(d: PartialDescription) -> Node:
    """The description's tree with underparsed segments removed."""
    trees = d.trees
    if len(trees) != 1:
        raise ValueError(f"expected a single tree, got {len(trees)}")
    return strip_underparsed(trees[0])


def is_candidate(d: PartialDescription, segments: Sequence[str], grammar: PositionGrammar) -> list[str]:
    """Problems preventing ``d`` from being a Gen member for the input; empty if none."""
    problems = []
    trees = d.trees
    if len(trees) != 1 or trees[0].label != grammar.start:
        problems.append("description is not a single tree rooted in the start symbol")
    rhs_of = {}
    for p in grammar.productions:
        rhs_of.setdefault(p.lhs, set()).add(p.rhs)
    stack = list(trees)
    while stack:
        node = stack.pop()
        kids = node.constituents()
        if len(kids) == 1 and isinstance(kids[0], Position):
            rhs = (kids[0].symbol,)
        else:
            if any(isinstance(k, Position) for k in kids):
                problems.append(f"{node.label} mixes positions and nonterminals")
                continue
            rhs = tuple(k.label for k in kids)
            stack.extend(kids)
        if rhs not in rhs_of.get(node.label, ()):
            problems.append(f"no production {node.label} -> {' '.join(rhs) or 'e'}")
    seen = []
    last = 0
    for leaf in fringe(d.items):
        if isinstance(leaf, Position):
            if not leaf.filled:
                continue
            if leaf.index <= last:
                problems.append("filled positions are out of input order")
            last = leaf.index
        idx = leaf.index
        if not 1 <= idx <= len(segments) or segments[idx - 1] != leaf.segment:
            problems.append(f"segment {leaf.segment}@{idx} does not match the input")
        seen.append(idx)
    if sorted(seen) != list(range(1, len(segments) + 1)):
        problems.append("input segments are not each parsed or underparsed exactly once")
    return problems


def remove_one_cycle(tree: Node) -> Iterator[Node]:
    """Trees obtained by cutting one overparsing cycle out of ``tree``.

    A cycle is an ancestor X whose subtree, outside one same-category
    descendant X, holds no filled position; cutting replaces the ancestor
    by that descendant.
    """
    for desc in _descendants(tree):
        if desc.label == tree.label and _filled(desc) == _filled(tree):
            yield desc
    for i, child in enumerate(tree.children):
        if isinstance(child, Node):
            for reduced in remove_one_cycle(child):
                yield Node(tree.label, tree.children[:i] + (reduced,) + tree.children[i + 1 :])


def _descendants(node: Node) -> Iterator[Node]:
    for child in node.children:
        if isinstance(child, Node):
            yield child
            yield from _descendants(child)


def _filled(node: Node) -> int:
    return sum(1 for leaf in fringe([node]) if isinstance(leaf, Position) and leaf.filled)


# -- factorial typology ------------------------------------------------------


@dataclass
class Language:
    surfaces: tuple[str, ...]
    rankings: list[tuple[str, ...]]


@dataclass
class Typology:
    inputs: list[str]
    languages: list[Language]

    def row_for(self, ranking: Sequence[str]) -> Language:
        ranking = tuple(ranking)
        for lang in self.languages:
            if ranking in lang.rankings:
                return lang
        raise KeyError(ranking)


def factorial_typology(
    inputs: Sequence[str],
    grammar: PositionGrammar,
    system: ConstraintSystem,
    marker: str = "□",
    max_constraints: int = MAX_TYPOLOGY_CONSTRAINTS,
    **parser_kwargs,
) -> Typology:
    """Parse every input under every total order of the constraints and group identical outcomes."""
    from .engine import Parser

    names = system.names
    if len(names) > max_constraints:
        raise InstanceTooLargeError(f"{len(names)} constraints exceed the typology limit of {max_constraints}")
    inputs = list(inputs)
    groups: dict[tuple[str, ...], Language] = {}
    for order in itertools.permutations(names):
        parser = Parser(grammar, system, Ranking.total(order), **parser_kwargs)
        surfaces = tuple(parser.parse(inp, marker).surface for inp in inputs)
        lang = groups.get(surfaces)
        if lang is None:
            lang = groups[surfaces] = Language(surfaces, [])
        lang.rankings.append(order)
    return Typology(inputs, list(groups.values()))


def typology_report(typ: Typology, fmt: str = "table") -> str:
    header = ["#", "rankings", "example ranking"] + [f"/{i}/" for i in typ.inputs]
    rows = []
    for n, lang in enumerate(typ.languages, 1):
        rows.append([str(n), str(len(lang.rankings)), " >> ".join(lang.rankings[0])] + list(lang.surfaces))
    if fmt == "json":
        return json.dumps(
            {
                "inputs": typ.inputs,
                "languages": [
                    {"surfaces": dict(zip(typ.inputs, lang.surfaces)), "rankings": [list(r) for r in lang.rankings]}
                    for lang in typ.languages
                ],
            },
            ensure_ascii=False,
            indent=2,
        )
    if fmt == "tsv":
        return "\n".join("\t".join(r) for r in [header] + rows)
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    line = lambda r: "  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows])


def surface(d: PartialDescription, marker: str = "□") -> str:
    return surface_form(d.items, marker)
