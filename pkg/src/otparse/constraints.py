"""Local constraints, mark vectors and strict-dominance rankings.

Constraints only ever see one local region of a description:

* a production application (a nonterminal with its child categories),
* a terminal occupancy (a nonterminal, its position and the filler if any),
* a single underparsed segment.

Constraint file format::

    alphabet: C V
    classes: cons = C
    constraint -(m/V) = forbid(m, V)
    constraint Parse = parse
    constraint Fill^m = fill(m)
    constraint NoLong = table { Y -> M F M : 1 ; M -> m/_ : 2 ; <C> : 1 }
    ranking: {-(m/V), Parse} >> {Fill^m} >> NoLong
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

WILDCARD = "*"
UNFILLED = "_"


class ConstraintSpecError(ValueError):
    pass


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    symbol: str
    classes: frozenset[str] = frozenset()


# -- local regions -----------------------------------------------------------


@dataclass(frozen=True)
class ProductionRegion:
    lhs: str
    children: tuple[str, ...]


@dataclass(frozen=True)
class OccupancyRegion:
    parent: str
    position: str
    segment: str | None  # None = unfilled


@dataclass(frozen=True)
class UnderparseRegion:
    segment: str


LocalRegion = Union[ProductionRegion, OccupancyRegion, UnderparseRegion]


# -- marks -------------------------------------------------------------------


class MarkVector(Mapping):
    """Violation counts per constraint name; absent names count zero."""

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        clean = {}
        for name, n in items:
            if n < 0 or int(n) != n:
                raise ValueError(f"mark count for {name!r} must be a non-negative integer, got {n!r}")
            if n:
                clean[name] = clean.get(name, 0) + int(n)
        self._counts = clean
        self._hash = None

    def __getitem__(self, name: str) -> int:
        return self._counts[name]

    def get(self, name: str, default: int = 0) -> int:
        return self._counts.get(name, default)

    def __iter__(self) -> Iterator[str]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __add__(self, other: "MarkVector") -> "MarkVector":
        if not other:
            return self
        if not self:
            return other
        out = dict(self._counts)
        for name, n in other.items():
            out[name] = out.get(name, 0) + n
        return MarkVector(out)

    def __eq__(self, other) -> bool:
        if isinstance(other, MarkVector):
            return self._counts == other._counts
        if isinstance(other, Mapping):
            return self._counts == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"MarkVector({self._counts!r})"

    def format(self, order: Iterable[str] | None = None) -> str:
        names = list(order) if order is not None else sorted(self._counts)
        names += [n for n in sorted(self._counts) if n not in names]
        parts = [f"{n}:{self._counts[n]}" for n in names if n in self._counts]
        return ", ".join(parts) if parts else "none"

    def __str__(self) -> str:
        return self.format()


EMPTY = MarkVector()


def combine(a: MarkVector, b: MarkVector) -> MarkVector:
    return a + b


class Ranking:
    """Strict-dominance hierarchy of strata, highest-ranked first.

    Violations are pooled within a stratum, then strata are compared
    lexicographically from the top.
    """

    def __init__(self, strata: Iterable[Iterable[str]]):
        self.strata = tuple(tuple(s) for s in strata)
        self.stratum_of: dict[str, int] = {}
        for i, stratum in enumerate(self.strata):
            if not stratum:
                raise RankingError("empty stratum")
            for name in stratum:
                if name in self.stratum_of:
                    raise RankingError(f"constraint {name!r} appears in two strata")
                self.stratum_of[name] = i

    @classmethod
    def total(cls, names: Iterable[str]) -> "Ranking":
        return cls([n] for n in names)

    @property
    def names(self) -> list[str]:
        return [n for s in self.strata for n in s]

    def key(self, marks: Mapping[str, int]) -> tuple[int, ...]:
        """Per-stratum totals; smaller tuples are more harmonic."""
        totals = [0] * len(self.strata)
        for name, n in marks.items():
            try:
                totals[self.stratum_of[name]] += n
            except KeyError:
                raise RankingError(f"unranked constraint {name!r}") from None
        return tuple(totals)

    def compare(self, a: Mapping[str, int], b: Mapping[str, int]) -> int:
        """1 if ``a`` is more harmonic than ``b``, -1 if less, 0 if tied."""
        ka, kb = self.key(a), self.key(b)
        return (ka < kb) - (ka > kb)

    def __eq__(self, other):
        return isinstance(other, Ranking) and [set(s) for s in self.strata] == [set(s) for s in other.strata]

    def __repr__(self) -> str:
        return "Ranking(" + " >> ".join("{" + ", ".join(s) + "}" for s in self.strata) + ")"

    def __str__(self) -> str:
        return " >> ".join("{" + ", ".join(s) + "}" for s in self.strata)


def compare(a: Mapping[str, int], b: Mapping[str, int], ranking: Ranking) -> int:
    return ranking.compare(a, b)


# -- constraints -------------------------------------------------------------


@dataclass(frozen=True)
class Forbid:
    position: str
    segments: frozenset[str]

    def count(self, region: LocalRegion) -> int:
        return int(
            isinstance(region, OccupancyRegion)
            and region.position == self.position
            and region.segment in self.segments
        )


@dataclass(frozen=True)
class Parse:
    def count(self, region: LocalRegion) -> int:
        return int(isinstance(region, UnderparseRegion))


@dataclass(frozen=True)
class Fill:
    position: str

    def count(self, region: LocalRegion) -> int:
        return int(isinstance(region, OccupancyRegion) and region.position == self.position and region.segment is None)


@dataclass(frozen=True)
class ProductionPattern:
    lhs: str
    children: tuple[str, ...]

    def matches(self, region: LocalRegion) -> bool:
        return (
            isinstance(region, ProductionRegion)
            and self.lhs in (WILDCARD, region.lhs)
            and self.children == region.children
        )


@dataclass(frozen=True)
class OccupancyPattern:
    parent: str
    position: str
    # None matches unfilled, WILDCARD any filled segment, else a segment set
    fillers: frozenset[str] | str | None

    def matches(self, region: LocalRegion) -> bool:
        if not isinstance(region, OccupancyRegion):
            return False
        if self.parent not in (WILDCARD, region.parent) or self.position not in (WILDCARD, region.position):
            return False
        if self.fillers is None:
            return region.segment is None
        if region.segment is None:
            return False
        return self.fillers == WILDCARD or region.segment in self.fillers


@dataclass(frozen=True)
class UnderparsePattern:
    segments: frozenset[str] | str

    def matches(self, region: LocalRegion) -> bool:
        return isinstance(region, UnderparseRegion) and (
            self.segments == WILDCARD or region.segment in self.segments
        )


@dataclass(frozen=True)
class Table:
    entries: tuple[tuple[object, int], ...]

    def count(self, region: LocalRegion) -> int:
        return sum(n for pattern, n in self.entries if pattern.matches(region))


@dataclass(frozen=True)
class Constraint:
    name: str
    kind: Forbid | Parse | Fill | Table

    def count(self, region: LocalRegion) -> int:
        return self.kind.count(region)


class ConstraintSystem:
    def __init__(self, alphabet: Iterable[Segment], constraints: Iterable[Constraint]):
        self.alphabet = tuple(alphabet)
        self.constraints = tuple(constraints)
        self.segments = {s.symbol: s for s in self.alphabet}
        names = [c.name for c in self.constraints]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ConstraintSpecError(f"duplicate constraint names: {sorted(dup)}")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.constraints]

    def assess(self, region: LocalRegion) -> MarkVector:
        return MarkVector((c.name, c.count(region)) for c in self.constraints)

    def positions(self) -> set[str]:
        """Positions mentioned by forbid/fill constraints."""
        out = set()
        for c in self.constraints:
            if isinstance(c.kind, (Forbid, Fill)):
                out.add(c.kind.position)
        return out

    def check_positions(self, terminals: Iterable[str]) -> None:
        known = set(terminals)
        for c in self.constraints:
            if isinstance(c.kind, (Forbid, Fill)) and c.kind.position not in known:
                raise ConstraintSpecError(f"constraint {c.name!r}: unknown position {c.kind.position!r}")


def assess(region: LocalRegion, system: ConstraintSystem) -> MarkVector:
    return system.assess(region)


# -- file format -------------------------------------------------------------

_CONSTRAINT = re.compile(r"constraint\s+(\S+)\s*=\s*(.+)$")
_CALL = re.compile(r"(forbid|fill|parse)\s*(?:\(([^)]*)\))?\s*$")


def parse_constraint_spec(text: str, positions: Iterable[str] | None = None) -> tuple[ConstraintSystem, Ranking]:
    """Read a constraint file; ``positions`` (grammar terminals) enables position checks."""
    alphabet: list[str] | None = None
    classes: dict[str, frozenset[str]] = {}
    constraints: list[Constraint] = []
    ranking_text = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        def fail(msg):
            return ConstraintSpecError(f"line {lineno}: {msg}")

        if line.startswith("alphabet:"):
            alphabet = line.split(":", 1)[1].split()
            if not alphabet or len(set(alphabet)) != len(alphabet):
                raise fail("alphabet must list distinct segments")
        elif line.startswith("classes:"):
            body = line.split(":", 1)[1]
            if "=" not in body:
                raise fail("expected 'classes: name = segments'")
            name, members = (s.strip() for s in body.split("=", 1))
            if alphabet is None:
                raise fail("classes declared before alphabet")
            segs = members.replace(",", " ").split()
            for s in segs:
                if s not in alphabet:
                    raise fail(f"unknown segment {s!r} in class {name!r}")
            classes[name] = frozenset(segs)
        elif line.startswith("constraint"):
            m = _CONSTRAINT.match(line)
            if not m:
                raise fail("expected 'constraint <name> = <definition>'")
            if alphabet is None:
                raise fail("constraint declared before alphabet")
            name, body = m.group(1), m.group(2).strip()
            try:
                kind = _parse_kind(body, alphabet, classes)
            except ConstraintSpecError as exc:
                raise fail(f"constraint {name!r}: {exc}") from None
            constraints.append(Constraint(name, kind))
        elif line.startswith("ranking:"):
            ranking_text = line.split(":", 1)[1]
        else:
            raise fail(f"unrecognised line {line!r}")

    if alphabet is None:
        raise ConstraintSpecError("missing 'alphabet:' line")
    if ranking_text is None:
        raise ConstraintSpecError("missing 'ranking:' line")
    seg_classes = {s: frozenset(c for c, members in classes.items() if s in members) for s in alphabet}
    system = ConstraintSystem([Segment(s, seg_classes[s]) for s in alphabet], constraints)
    ranking = parse_ranking(ranking_text, system.names)
    if positions is not None:
        system.check_positions(positions)
    return system, ranking


def parse_ranking(text: str, names: Iterable[str]) -> Ranking:
    known = list(names)
    strata = []
    for part in text.split(">>"):
        part = part.strip()
        if part.startswith("{"):
            if not part.endswith("}"):
                raise ConstraintSpecError(f"unbalanced braces in stratum {part!r}")
            members = [m.strip() for m in part[1:-1].split(",") if m.strip()]
        else:
            members = [part] if part else []
        if not members:
            raise ConstraintSpecError("empty stratum in ranking")
        for m in members:
            if m not in known:
                raise ConstraintSpecError(f"ranking mentions unknown constraint {m!r}")
        strata.append(members)
    try:
        ranking = Ranking(strata)
    except RankingError as exc:
        raise ConstraintSpecError(str(exc)) from None
    missing = [n for n in known if n not in ranking.stratum_of]
    if missing:
        raise ConstraintSpecError(f"constraints missing from ranking: {missing}")
    return ranking


def _resolve(token: str, alphabet: list[str], classes: dict[str, frozenset[str]]) -> frozenset[str]:
    if token in classes:
        return classes[token]
    if token in alphabet:
        return frozenset([token])
    raise ConstraintSpecError(f"unknown segment or class {token!r}")


def _parse_kind(body: str, alphabet, classes):
    if body.startswith("table"):
        m = re.match(r"table\s*\{(.*)\}\s*$", body)
        if not m:
            raise ConstraintSpecError("expected 'table { pattern : count ; ... }'")
        entries = []
        for item in m.group(1).split(";"):
            item = item.strip()
            if not item:
                continue
            if ":" not in item:
                raise ConstraintSpecError(f"table entry {item!r} lacks ': count'")
            pat, count = item.rsplit(":", 1)
            try:
                n = int(count)
            except ValueError:
                raise ConstraintSpecError(f"bad count {count.strip()!r}") from None
            if n < 0:
                raise ConstraintSpecError("table counts must be non-negative")
            entries.append((_parse_pattern(pat.strip(), alphabet, classes), n))
        return Table(tuple(entries))

    m = _CALL.match(body)
    if not m:
        raise ConstraintSpecError(f"unknown constraint form {body!r}")
    fn, args_text = m.group(1), m.group(2)
    args = [a.strip() for a in args_text.split(",")] if args_text and args_text.strip() else []
    if fn == "parse":
        if args:
            raise ConstraintSpecError("parse takes no arguments")
        return Parse()
    if fn == "fill":
        if len(args) != 1:
            raise ConstraintSpecError("fill takes one position")
        return Fill(args[0])
    if len(args) != 2:
        raise ConstraintSpecError("forbid takes a position and a segment class")
    return Forbid(args[0], _resolve(args[1], alphabet, classes))


def _parse_pattern(text: str, alphabet, classes):
    if text.startswith("<") and text.endswith(">"):
        token = text[1:-1].strip()
        return UnderparsePattern(WILDCARD if token == WILDCARD else _resolve(token, alphabet, classes))
    if "->" not in text:
        raise ConstraintSpecError(f"bad table pattern {text!r}")
    lhs, rhs = (s.strip() for s in text.split("->", 1))
    parts = rhs.split()
    if len(parts) == 1 and "/" in parts[0]:
        position, filler = parts[0].split("/", 1)
        if filler == UNFILLED:
            fillers = None
        elif filler == WILDCARD:
            fillers = WILDCARD
        else:
            fillers = _resolve(filler, alphabet, classes)
        return OccupancyPattern(lhs, position, fillers)
    children = () if parts == ["e"] else tuple(parts)
    return ProductionPattern(lhs, children)
