"""Cubic-time harmonic parsing over a position grammar.

The chart is filled block by block, shortest spans first.  Inside a block,
underparsing operations run first, then parsing operations, then repeated
passes of overparsing operations until no cell improves.  Base overparsing
structures ``[X,0]`` (the best all-unfilled structure per category) are
computed once up front.

Two interchangeable fillers implement the same operation order and
tie-breaking: :class:`ReferenceFill` builds full trees in pure Python, and
the optional compiled kernel (``otparse._kernel``) stores backpointers in an
append-only node arena.  The compiled kernel is used when it imports;
setting ``OTPARSE_PURE=1`` forces the pure-Python path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .chart import (
    MARKER,
    Chart,
    Node,
    PartialDescription,
    Position,
    Underparsed,
    blocks_in_fill_order,
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
from .grammar import (
    CellCategory,
    GrammarError,
    PositionGrammar,
    completion_rules,
    derive_categories,
    nonterminal,
    validate,
)

try:
    from . import _kernel
except ImportError:  # extension not built
    _kernel = None

DEFAULT_BACKEND = "compiled" if _kernel is not None and os.environ.get("OTPARSE_PURE") != "1" else "python"

# Operation codes shared with the compiled kernel; index = code.
OP_NAMES = (
    "base-unfilled",
    "base-epsilon",
    "base-wrap",
    "base-combine",
    "underparse",
    "underparse-left",
    "underparse-run",
    "underparse-right",
    "parse-terminal",
    "parse-combine",
    "overparse-wrap",
    "overparse-combine",
)
OP_CODES = {name: i for i, name in enumerate(OP_NAMES)}


class UnknownSegmentError(ValueError):
    pass


class CyclePreconditionError(ValueError):
    """Some position can be left unfilled without any mark."""


class NoDescriptionError(RuntimeError):
    pass


@dataclass
class ParseResult:
    description: PartialDescription
    marks: MarkVector
    surface: str
    run: "ChartRun | None" = field(default=None, repr=False)

    def tree(self) -> Node:
        return self.description.trees[0]


def check_overparsing_penalized(grammar: PositionGrammar, system: ConstraintSystem) -> list[str]:
    """Terminal productions whose unfilled position costs nothing."""
    free = []
    for p in grammar.productions:
        if p.is_terminal and not system.assess(OccupancyRegion(p.lhs, p.rhs[0], None)):
            free.append(str(p))
    return free


class Parser:
    """A compiled grammar + constraint system + ranking, ready to parse inputs.

    Construction validates the grammar and refuses constraint systems that
    leave some position free to stay unfilled (pass ``allow_unpenalized``
    to skip that check at your own risk).
    """

    def __init__(
        self,
        grammar: PositionGrammar,
        system: ConstraintSystem,
        ranking: Ranking,
        allow_unpenalized: bool = False,
    ):
        findings = validate(grammar)
        if findings:
            raise GrammarError("invalid grammar: " + "; ".join(findings))
        system.check_positions(grammar.terminals)
        for name in system.names:
            if name not in ranking.stratum_of:
                raise ValueError(f"constraint {name!r} is not ranked")
        if not allow_unpenalized:
            free = check_overparsing_penalized(grammar, system)
            if free:
                raise CyclePreconditionError("unfilled positions incur no marks in: " + ", ".join(free))
        self.grammar = grammar
        self.system = system
        self.ranking = ranking
        self.categories = derive_categories(grammar)
        self.cat_index = {c: i for i, c in enumerate(self.categories)}
        self.rules = completion_rules(grammar)
        self.start = nonterminal(grammar.start)
        self.prod_index = {p: i for i, p in enumerate(grammar.productions)}

        def by_target(rules):
            out = {c: [] for c in self.categories}
            for r in rules:
                out[r.target].append(r)
            return out

        self.terminal_for = by_target(self.rules.terminal)
        self.epsilon_for = by_target(self.rules.epsilon)
        self.wrap_for = by_target(self.rules.wrap)
        self.binary_for = by_target(self.rules.binary)

        self.production_marks = {
            p: system.assess(ProductionRegion(p.lhs, p.rhs))
            for p in grammar.productions
            if not p.is_terminal
        }
        self.unfilled_marks = {
            p: system.assess(OccupancyRegion(p.lhs, p.rhs[0], None)) for p in grammar.productions if p.is_terminal
        }
        self.filled_marks = {
            (p, s.symbol): system.assess(OccupancyRegion(p.lhs, p.rhs[0], s.symbol))
            for p in grammar.productions
            if p.is_terminal
            for s in system.alphabet
        }
        self.underparse_marks = {s.symbol: system.assess(UnderparseRegion(s.symbol)) for s in system.alphabet}

    # -- input ---------------------------------------------------------------

    def tokenize(self, text: str | Sequence[str]) -> list[str]:
        """Split an input into segment symbols (whitespace or longest match)."""
        symbols = sorted(self.system.segments, key=len, reverse=True)
        if not isinstance(text, str):
            out = list(text)
        elif any(ch.isspace() for ch in text.strip()):
            out = text.split()
        else:
            out, i = [], 0
            while i < len(text):
                for s in symbols:
                    if text.startswith(s, i):
                        out.append(s)
                        i += len(s)
                        break
                else:
                    raise UnknownSegmentError(f"unknown segment at {text[i:]!r}")
        for s in out:
            if s not in self.system.segments:
                raise UnknownSegmentError(f"unknown segment {s!r}")
        return out

    # -- entry points --------------------------------------------------------

    def run(self, segments: str | Sequence[str], backend: str | None = None) -> "ChartRun":
        segments = self.tokenize(segments)
        backend = backend or DEFAULT_BACKEND
        if backend == "compiled":
            if _kernel is None:
                raise RuntimeError("compiled kernel is not available")
            return KernelRun(self, segments)
        if backend != "python":
            raise ValueError(f"unknown backend {backend!r}")
        return ReferenceFill(self, segments).run()

    def parse(self, segments: str | Sequence[str], marker: str = MARKER, backend: str | None = None) -> ParseResult:
        run = self.run(segments, backend)
        d = run.result
        if d is None:
            raise NoDescriptionError("no description exists for this input")
        return ParseResult(d, d.marks, surface_form(d.items, marker), run)

    def base_structures(self, backend: str | None = None) -> dict[CellCategory, PartialDescription | None]:
        return self.run([], backend).base

    @cached_property
    def program(self) -> dict:
        return compile_program(self)


def parse(
    segments,
    grammar: PositionGrammar,
    system: ConstraintSystem,
    ranking: Ranking,
    marker: str = MARKER,
    **kwargs,
) -> ParseResult:
    return Parser(grammar, system, ranking, **kwargs).parse(segments, marker)


def compute_base_structures(grammar, system, ranking, **kwargs) -> dict[CellCategory, PartialDescription | None]:
    return Parser(grammar, system, ranking, **kwargs).base_structures()


# -- results -----------------------------------------------------------------


class ChartRun:
    """Everything a fill produced: cells, offer log, pass counts, counters."""

    backend = "python"

    def __init__(self, parser: Parser, segments: list[str]):
        self.parser = parser
        self.segments = segments
        self.length = len(segments)
        self.passes: dict[tuple[int, int], int] = {}
        self.base_passes = 0
        self.combine_count = 0

    @property
    def chart(self) -> Chart:
        raise NotImplementedError

    @property
    def log(self) -> list[PartialDescription]:
        return self.chart.log

    @property
    def base(self) -> dict[CellCategory, PartialDescription | None]:
        return dict(self.chart.base)

    @property
    def result(self) -> PartialDescription | None:
        if self.length == 0:
            return self.chart[self.parser.start, 0]
        return self.chart[self.parser.start, 1, self.length]


class ReferenceFill(ChartRun):
    """Pure-Python chart filling over full trees."""

    def __init__(self, parser: Parser, segments: list[str]):
        super().__init__(parser, segments)
        self._chart = Chart(parser.categories, len(segments)) if segments else _empty_chart(parser.categories)

    @property
    def chart(self) -> Chart:
        return self._chart

    def offer(self, key, cand: PartialDescription) -> bool:
        return self._chart.offer(key, cand, self.parser.ranking)

    def run(self) -> "ReferenceFill":
        self.compute_base()
        for a, c in blocks_in_fill_order(self.length):
            self.fill_block(a, c)
        return self

    def compute_base(self) -> None:
        cats = self.parser.categories
        while True:
            self.base_passes += 1
            changed = False
            for cat in cats:
                for cand in self.base_ops(cat):
                    changed |= self.offer((cat, 0), cand)
            if not changed:
                break

    def fill_block(self, a: int, c: int) -> None:
        cats = self.parser.categories
        for cat in cats:
            for cand in self.underparse_ops(cat, a, c):
                self.offer((cat, a, c), cand)
        for cat in cats:
            for cand in self.parse_ops(cat, a, c):
                self.offer((cat, a, c), cand)
        passes = 0
        while True:
            passes += 1
            changed = False
            for cat in cats:
                for cand in self.overparse_ops(cat, a, c):
                    changed |= self.offer((cat, a, c), cand)
            if not changed:
                break
        self.passes[a, c] = passes

    # -- candidate builders --------------------------------------------------

    def _seg(self, i: int) -> Underparsed:
        return Underparsed(self.segments[i - 1], i)

    def _build(self, rule, left: PartialDescription, right: PartialDescription | None, a, c, op: str):
        items = left.items + (right.items if right is not None else ())
        marks = left.marks + (right.marks if right is not None else EMPTY)
        prod = rule.production
        if prod is not None:
            items = (Node(prod.lhs, items),)
            marks = marks + self.parser.production_marks[prod]
        return PartialDescription(items, rule.target, a, c, marks, op)

    def base_ops(self, cat: CellCategory) -> Iterator[PartialDescription]:
        p = self.parser
        base = self._chart.base
        for rule in p.terminal_for[cat]:
            node = Node(rule.production.lhs, (Position(rule.terminal),))
            yield PartialDescription((node,), cat, None, None, p.unfilled_marks[rule.production], "base-unfilled")
        for rule in p.epsilon_for[cat]:
            yield PartialDescription(
                (Node(rule.production.lhs, ()),), cat, None, None, p.production_marks[rule.production], "base-epsilon"
            )
        for rule in p.wrap_for[cat]:
            child = base[rule.child]
            if child is not None:
                yield self._build(rule, child, None, None, None, "base-wrap")
        for rule in p.binary_for[cat]:
            left, right = base[rule.left], base[rule.right]
            if left is not None and right is not None:
                yield self._build(rule, left, right, None, None, "base-combine")

    def underparse_singleton(self, cat: CellCategory, a: int) -> PartialDescription | None:
        base = self._chart.base[cat]
        if base is None:
            return None
        seg = self._seg(a)
        return PartialDescription(
            (seg,) + base.items, cat, a, a, self.parser.underparse_marks[seg.segment] + base.marks, "underparse"
        )

    def underparse_extend(self, cat: CellCategory, a: int, c: int) -> Iterator[PartialDescription]:
        """Left extensions (leading runs, or onto unparsed material) then the right extension.

        Underparsed segments attach on the right of parsed material.  The
        exception is a run of segments at the very start of the input, which
        has nothing parsed to its left and so attaches on the left.
        """
        chart = self._chart
        um = self.parser.underparse_marks
        if a == 1:
            run: tuple = ()
            marks = EMPTY
            for k in range(1, c):
                seg = self._seg(k)
                run += (seg,)
                marks = marks + um[seg.segment]
                src = chart[cat, k + 1, c]
                if src is not None:
                    op = "underparse-left" if k == 1 else "underparse-run"
                    yield PartialDescription(run + src.items, cat, a, c, marks + src.marks, op)
        else:
            src = chart[cat, a + 1, c]
            if src is not None and src.parsed_count() == 0:
                seg = self._seg(a)
                yield PartialDescription((seg,) + src.items, cat, a, c, um[seg.segment] + src.marks, "underparse-left")
        src = chart[cat, a, c - 1]
        if src is not None:
            seg = self._seg(c)
            yield PartialDescription(src.items + (seg,), cat, a, c, src.marks + um[seg.segment], "underparse-right")

    def underparse_ops(self, cat, a, c) -> Iterator[PartialDescription]:
        if a == c:
            cand = self.underparse_singleton(cat, a)
            if cand is not None:
                yield cand
        else:
            yield from self.underparse_extend(cat, a, c)

    def parse_terminal(self, rule, a: int) -> PartialDescription:
        seg = self.segments[a - 1]
        node = Node(rule.production.lhs, (Position(rule.terminal, seg, a),))
        return PartialDescription((node,), rule.target, a, a, self.parser.filled_marks[rule.production, seg], "parse-terminal")

    def parse_combine(self, rule, a: int, c: int) -> Iterator[PartialDescription]:
        chart = self._chart
        for b in range(a, c):
            self.combine_count += 1
            left, right = chart[rule.left, a, b], chart[rule.right, b + 1, c]
            if left is not None and right is not None:
                yield self._build(rule, left, right, a, c, "parse-combine")

    def parse_ops(self, cat, a, c) -> Iterator[PartialDescription]:
        p = self.parser
        if a == c:
            for rule in p.terminal_for[cat]:
                yield self.parse_terminal(rule, a)
        else:
            for rule in p.binary_for[cat]:
                yield from self.parse_combine(rule, a, c)

    def overparse_ops(self, cat, a, c) -> Iterator[PartialDescription]:
        """One pass of overparsing candidates for cell ``[cat, a, c]``.

        Each candidate reads the incumbents at the moment it is built, so an
        improvement earlier in the pass feeds later candidates.
        """
        p = self.parser
        chart = self._chart
        for rule in p.wrap_for[cat]:
            src = chart[rule.child, a, c]
            if src is not None:
                yield self._build(rule, src, None, a, c, "overparse-wrap")
        for rule in p.binary_for[cat]:
            # completions try the base on the left first, prefixes on the right first
            sides = ("base-left", "base-right") if rule.production is not None else ("base-right", "base-left")
            for side in sides:
                if side == "base-left":
                    left, right = chart[rule.left, 0], chart[rule.right, a, c]
                else:
                    left, right = chart[rule.left, a, c], chart[rule.right, 0]
                if left is not None and right is not None:
                    yield self._build(rule, left, right, a, c, "overparse-combine")

    def overparse_block(self, a: int, c: int) -> bool:
        """One overparsing pass over the whole block; True if any cell changed."""
        changed = False
        for cat in self.parser.categories:
            for cand in self.overparse_ops(cat, a, c):
                changed |= self.offer((cat, a, c), cand)
        return changed


def _empty_chart(categories) -> Chart:
    chart = Chart.__new__(Chart)
    chart.categories = list(categories)
    chart.length = 0
    chart.cells = {}
    chart.base = {cat: None for cat in chart.categories}
    chart.log = []
    return chart


# -- compiled kernel glue ----------------------------------------------------


def compile_program(parser: Parser) -> dict:
    """Flatten rules and their region marks into integer arrays for the kernel."""
    names = parser.system.names
    K = len(names)
    seg_ix = {s.symbol: i for i, s in enumerate(parser.system.alphabet)}
    cix = parser.cat_index
    cats = parser.categories
    pix = parser.prod_index

    def vec(mv: MarkVector) -> list[int]:
        return [mv.get(n) for n in names]

    def grouped(table):
        rows, offsets = [], [0]
        for cat in cats:
            rows.extend(table[cat])
            offsets.append(len(rows))
        return rows, np.asarray(offsets, dtype=np.int32)

    term, t_off = grouped(parser.terminal_for)
    eps, e_off = grouped(parser.epsilon_for)
    wrap, w_off = grouped(parser.wrap_for)
    binr, b_off = grouped(parser.binary_for)
    S = len(seg_ix)

    def ints(values):
        return np.asarray(values, dtype=np.int32).reshape(-1)

    def marks(rows, width=None):
        arr = np.asarray(rows, dtype=np.int64)
        return arr.reshape(-1, K) if width is None else arr.reshape(-1, width, K)

    zero = [0] * K
    return {
        "n_cats": len(cats),
        "n_constraints": K,
        "stratum": ints([parser.ranking.stratum_of[n] for n in names]),
        "n_strata": len(parser.ranking.strata),
        "seg_index": seg_ix,
        "parse_marks": marks([vec(parser.underparse_marks[s.symbol]) for s in parser.system.alphabet]),
        "t_off": t_off,
        "t_prod": ints([pix[r.production] for r in term]),
        "t_unfilled": marks([vec(parser.unfilled_marks[r.production]) for r in term]),
        "t_filled": marks(
            [[vec(parser.filled_marks[r.production, s.symbol]) for s in parser.system.alphabet] for r in term], S
        ),
        "e_off": e_off,
        "e_prod": ints([pix[r.production] for r in eps]),
        "e_marks": marks([vec(parser.production_marks[r.production]) for r in eps]),
        "w_off": w_off,
        "w_child": ints([cix[r.child] for r in wrap]),
        "w_prod": ints([pix[r.production] for r in wrap]),
        "w_marks": marks([vec(parser.production_marks[r.production]) for r in wrap]),
        "b_off": b_off,
        "b_left": ints([cix[r.left] for r in binr]),
        "b_right": ints([cix[r.right] for r in binr]),
        "b_prod": ints([pix[r.production] if r.production is not None else -1 for r in binr]),
        "b_marks": marks([vec(parser.production_marks[r.production]) if r.production else zero for r in binr]),
    }


class KernelRun(ChartRun):
    """Chart data from the compiled kernel; trees are rebuilt on demand."""

    backend = "compiled"

    def __init__(self, parser: Parser, segments: list[str]):
        super().__init__(parser, segments)
        prog = parser.program
        segs = np.asarray([prog["seg_index"][s] for s in segments], dtype=np.int32)
        out = _kernel.fill_chart(prog, segs)
        self.nodes = out["nodes"].tolist()
        self.node_marks = out["marks"]
        self.cells = out["chart"]
        self.base_ids = out["base"]
        self.base_passes = int(out["base_passes"])
        self.combine_count = int(out["combine_count"])
        pass_arr = out["passes"]
        self.passes = {(a, c): int(pass_arr[a - 1, c - 1]) for a, c in blocks_in_fill_order(self.length)}
        self._items: dict[int, tuple] = {}
        self._desc: dict[int, PartialDescription] = {}

    def items(self, node_id: int) -> tuple:
        """Rebuild the item sequence of an arena node (iteratively, memoized)."""
        memo = self._items
        stack = [node_id]
        while stack:
            nid = stack[-1]
            if nid in memo:
                stack.pop()
                continue
            _, op, left, right, prod, seg, a, c, _ = self.nodes[nid]
            pending = [x for x in (left, right) if x >= 0 and x not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            memo[nid] = self._assemble(op, left, right, prod, seg, a, c)
        return memo[node_id]

    def _assemble(self, op, left, right, prod, seg, a, c) -> tuple:
        memo = self._items
        productions = self.parser.grammar.productions
        segs = self.segments
        name = OP_NAMES[op]
        if name == "base-unfilled":
            p = productions[prod]
            return (Node(p.lhs, (Position(p.rhs[0]),)),)
        if name == "base-epsilon":
            return (Node(productions[prod].lhs, ()),)
        if name == "parse-terminal":
            p = productions[prod]
            return (Node(p.lhs, (Position(p.rhs[0], segs[a - 1], a),)),)
        if name in ("underparse", "underparse-left"):
            return (Underparsed(segs[a - 1], a),) + memo[left]
        if name == "underparse-run":
            return tuple(Underparsed(segs[i - 1], i) for i in range(1, seg + 1)) + memo[left]
        if name == "underparse-right":
            return memo[left] + (Underparsed(segs[c - 1], c),)
        items = memo[left] + (memo[right] if right >= 0 else ())
        if prod >= 0:
            return (Node(productions[prod].lhs, items),)
        return items

    def description(self, node_id: int) -> PartialDescription:
        d = self._desc.get(node_id)
        if d is None:
            cat, op, _, _, _, _, a, c, _ = self.nodes[node_id]
            names = self.parser.system.names
            marks = MarkVector(zip(names, (int(x) for x in self.node_marks[node_id])))
            d = PartialDescription(
                self.items(node_id),
                self.parser.categories[cat],
                a or None,
                c or None,
                marks,
                OP_NAMES[op],
            )
            self._desc[node_id] = d
        return d

    @cached_property
    def chart(self) -> Chart:
        cats = self.parser.categories
        chart = Chart(cats, self.length) if self.length else _empty_chart(cats)
        chart.log = [self.description(i) for i in range(len(self.nodes))]
        for i, cat in enumerate(cats):
            if self.base_ids[i] >= 0:
                chart.base[cat] = self.description(int(self.base_ids[i]))
        for a, c in blocks_in_fill_order(self.length):
            for i, cat in enumerate(cats):
                nid = int(self.cells[a - 1, c - 1, i])
                if nid >= 0:
                    chart.cells[cat, a, c] = self.description(nid)
        return chart

    @property
    def result(self) -> PartialDescription | None:
        i = self.parser.cat_index[self.parser.start]
        nid = int(self.base_ids[i]) if self.length == 0 else int(self.cells[0, self.length - 1, i])
        return None if nid < 0 else self.description(nid)

    @property
    def base(self) -> dict[CellCategory, PartialDescription | None]:
        return {
            cat: (self.description(int(self.base_ids[i])) if self.base_ids[i] >= 0 else None)
            for i, cat in enumerate(self.parser.categories)
        }
