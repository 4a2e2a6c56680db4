"""Partial descriptions and the three-dimensional chart that holds them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .constraints import (
    EMPTY,
    LocalRegion,
    MarkVector,
    OccupancyRegion,
    ProductionRegion,
    Ranking,
    UnderparseRegion,
)
from .grammar import CellCategory

MARKER = "□"  # □


@dataclass(frozen=True)
class Position:
    """A structural position, unfilled or filled with input segment ``index`` (1-based)."""

    symbol: str
    segment: str | None = None
    index: int | None = None

    @property
    def filled(self) -> bool:
        return self.segment is not None


@dataclass(frozen=True)
class Underparsed:
    segment: str
    index: int


@dataclass(frozen=True)
class Node:
    label: str
    children: tuple["Item", ...]

    def constituents(self) -> tuple:
        return tuple(c for c in self.children if not isinstance(c, Underparsed))


Item = Union[Node, Position, Underparsed]


def local_regions(items: Iterable[Item]) -> Iterator[LocalRegion]:
    """Every local region inside a sequence of items, in pre-order."""
    stack = list(reversed(tuple(items)))
    while stack:
        item = stack.pop()
        if isinstance(item, Underparsed):
            yield UnderparseRegion(item.segment)
        elif isinstance(item, Node):
            kids = item.constituents()
            if len(kids) == 1 and isinstance(kids[0], Position):
                yield OccupancyRegion(item.label, kids[0].symbol, kids[0].segment)
                stack.extend(reversed([c for c in item.children if c is not kids[0]]))
            else:
                yield ProductionRegion(item.label, tuple(k.label for k in kids))
                stack.extend(reversed(item.children))
        else:
            raise TypeError(f"bare position {item!r} outside a nonterminal")


def fringe(items: Iterable[Item]) -> Iterator[Position | Underparsed]:
    for item in items:
        if isinstance(item, Node):
            yield from fringe(item.children)
        else:
            yield item


@dataclass(frozen=True)
class PartialDescription:
    """Ordered trees and underparsed segments covering input ``[start, end]``.

    Base overparsing structures have ``start = end = None`` (empty coverage).
    """

    items: tuple[Item, ...]
    category: CellCategory
    start: int | None
    end: int | None
    marks: MarkVector = EMPTY
    op: str = ""

    @property
    def coverage(self) -> tuple[int, int] | None:
        return None if self.start is None else (self.start, self.end)

    @property
    def trees(self) -> tuple[Node, ...]:
        return tuple(i for i in self.items if isinstance(i, Node))

    def parsed_count(self) -> int:
        return sum(1 for leaf in fringe(self.items) if isinstance(leaf, Position) and leaf.filled)

    def render(self, marker: str = MARKER, verbose: bool = False) -> str:
        return render_items(self.items, marker, verbose)

    def surface(self, marker: str = MARKER) -> str:
        return surface_form(self.items, marker)


def render_items(items: Iterable[Item], marker: str = MARKER, verbose: bool = False) -> str:
    return " + ".join(render_item(i, marker, verbose) for i in items)


def render_item(item: Item, marker: str = MARKER, verbose: bool = False) -> str:
    """Bracketed notation X(Y,Z); ``verbose`` shows filled positions as ``pos/SEG``."""
    if isinstance(item, Underparsed):
        return f"<{item.segment}>"
    if isinstance(item, Position):
        if not item.filled:
            return marker
        return f"{item.symbol}/{item.segment}" if verbose else item.segment
    inner = ",".join(render_item(c, marker, verbose) for c in item.children)
    return f"{item.label}({inner})"


def surface_form(items, marker: str = MARKER) -> str:
    if isinstance(items, PartialDescription):
        items = items.items
    out = []
    for leaf in fringe(items):
        if isinstance(leaf, Position):
            out.append(leaf.segment if leaf.filled else marker)
    return "".join(out)


def strip_underparsed(item: Item) -> Item:
    """Drop underparsed segments; their attachment point carries no information."""
    if isinstance(item, Node):
        return Node(item.label, tuple(strip_underparsed(c) for c in item.children if not isinstance(c, Underparsed)))
    return item


def check_description(d: PartialDescription, segments: list[str]) -> list[str]:
    """Structural problems with ``d`` against the (1-based) input ``segments``."""
    problems = []
    leaves = list(fringe(d.items))
    covered = []
    for leaf in leaves:
        if isinstance(leaf, Underparsed) or leaf.filled:
            covered.append((leaf.index, leaf.segment))
    if d.start is None:
        if covered:
            problems.append("base structure covers input")
    else:
        want = [(i, segments[i - 1]) for i in range(d.start, d.end + 1)]
        if covered != want:
            problems.append(f"fringe {covered} does not match input span {want}")
    for item in d.items:
        if isinstance(item, Position):
            problems.append("position outside a nonterminal")
    for node in _nodes(d.items):
        kids = node.constituents()
        if any(isinstance(k, Position) for k in kids) and len(kids) != 1:
            problems.append(f"{node.label} mixes positions with other children")
    roots = tuple(t.label for t in d.trees)
    if roots != d.category.symbols:
        problems.append(f"roots {roots} do not match category {d.category}")
    return problems


def _nodes(items) -> Iterator[Node]:
    for item in items:
        if isinstance(item, Node):
            yield item
            yield from _nodes(item.children)


# -- the table ---------------------------------------------------------------


class Chart:
    """Cells ``[X, a, c]`` for 1 <= a <= c <= J, plus base entries ``[X, 0]``."""

    def __init__(self, categories: Iterable[CellCategory], length: int):
        if length < 1:
            raise ValueError("chart needs at least one input segment")
        self.categories = list(categories)
        self.length = length
        self.cells: dict[tuple[CellCategory, int, int], PartialDescription | None] = {
            (cat, a, c): None for cat in self.categories for a, c in blocks_in_fill_order(length)
        }
        self.base: dict[CellCategory, PartialDescription | None] = {cat: None for cat in self.categories}
        self.log: list[PartialDescription] = []

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, key) -> PartialDescription | None:
        if len(key) == 2:
            return self.base[key[0]]
        return self.cells[key]

    def block(self, a: int, c: int) -> dict[CellCategory, PartialDescription | None]:
        return {cat: self.cells[cat, a, c] for cat in self.categories}

    def entries(self) -> Iterator[PartialDescription]:
        for d in self.base.values():
            if d is not None:
                yield d
        for d in self.cells.values():
            if d is not None:
                yield d

    def offer(self, key, candidate: PartialDescription, ranking: Ranking) -> bool:
        """Store ``candidate`` iff it is strictly more harmonic than the incumbent."""
        cat = key[0]
        coverage = None if len(key) == 2 else (key[1], key[2])
        if candidate.category != cat or candidate.coverage != coverage:
            raise ValueError(
                f"candidate [{candidate.category},{candidate.coverage}] offered to cell {_fmt_key(key)}"
            )
        store = self.base if coverage is None else self.cells
        slot = cat if coverage is None else key
        if slot not in store:
            raise KeyError(f"no cell {_fmt_key(key)}")
        incumbent = store[slot]
        if incumbent is not None and ranking.compare(candidate.marks, incumbent.marks) <= 0:
            return False
        store[slot] = candidate
        self.log.append(candidate)
        return True


def new_chart(categories: Iterable[CellCategory], length: int) -> Chart:
    return Chart(categories, length)


def blocks_in_fill_order(length: int) -> list[tuple[int, int]]:
    """(a, c) spans level by level: all singletons, then span 2, 3, ..."""
    return [(a, a + d) for d in range(length) for a in range(1, length - d + 1)]


def cell_name(d: PartialDescription) -> str:
    if d.start is None:
        return f"[{d.category},0]"
    return f"[{d.category},{d.start},{d.end}]"


def _fmt_key(key) -> str:
    return "[" + ",".join(str(k) for k in key) + ("" if len(key) == 3 else ",0") + "]"


def trace_line(d: PartialDescription, order=None, marker: str = MARKER) -> str:
    return f"{cell_name(d)} <- {d.op} marks={d.marks.format(order)} tree={d.render(marker)}"
