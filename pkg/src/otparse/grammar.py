"""Context-free position structure grammars.

A position grammar generates the trees of structural positions into which
input segments are parsed.  Every right-hand side is either a single
terminal (a position), a non-empty string of nonterminals, or epsilon on the
start symbol.

The grammar file format is line based::

    # comment
    start: S
    S -> F | e
    F -> Y | Y F
    Y -> P | M F M
    M -> m
    P -> p

Lowercase-initial symbols are terminals, uppercase-initial symbols are
nonterminals and ``e`` is the reserved epsilon token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

EPSILON = "e"

_SYMBOL = re.compile(r"[A-Za-z][A-Za-z0-9_']*")


class GrammarError(ValueError):
    """Raised for malformed grammar text or an ill-formed production."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


def is_terminal(symbol: str) -> bool:
    return symbol[:1].islower() and symbol != EPSILON


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]

    @property
    def is_epsilon(self) -> bool:
        return not self.rhs

    @property
    def is_terminal(self) -> bool:
        return len(self.rhs) == 1 and is_terminal(self.rhs[0])

    @property
    def is_unary(self) -> bool:
        return len(self.rhs) == 1 and not is_terminal(self.rhs[0])

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs) if self.rhs else EPSILON}"


@dataclass(frozen=True)
class CellCategory:
    """A chart layer: a nonterminal, or a left-aligned prefix of some rhs.

    ``symbols`` holds the nonterminal names covered, a single name for a
    nonterminal category and two or more for a prefix category.
    """

    symbols: tuple[str, ...]
    is_prefix: bool = False

    @property
    def name(self) -> str:
        return "".join(self.symbols)

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"CellCategory({self.name!r})"


def nonterminal(name: str) -> CellCategory:
    return CellCategory((name,))


@dataclass(frozen=True)
class PositionGrammar:
    productions: tuple[Production, ...]
    start: str
    nonterminals: tuple[str, ...] = field(default=())
    terminals: tuple[str, ...] = field(default=())

    def __post_init__(self):
        # declared (lhs) nonterminals first, then any that only occur on a rhs
        nts: list[str] = [self.start]
        for p in self.productions:
            if p.lhs not in nts:
                nts.append(p.lhs)
        ts: list[str] = []
        for p in self.productions:
            for sym in p.rhs:
                if is_terminal(sym):
                    if sym not in ts:
                        ts.append(sym)
                elif sym not in nts:
                    nts.append(sym)
        if not self.nonterminals:
            object.__setattr__(self, "nonterminals", tuple(nts))
        if not self.terminals:
            object.__setattr__(self, "terminals", tuple(ts))

    @classmethod
    def from_rules(cls, rules: Iterable[tuple[str, Sequence[str]]], start: str | None = None) -> "PositionGrammar":
        prods = tuple(Production(lhs, tuple(rhs)) for lhs, rhs in rules)
        if not prods:
            raise GrammarError("grammar has no productions")
        for p in prods:
            _check_production(p, start or prods[0].lhs)
        return cls(prods, start or prods[0].lhs)

    def productions_for(self, lhs: str) -> list[Production]:
        return [p for p in self.productions if p.lhs == lhs]


def _check_production(p: Production, start: str, line: int | None = None, column: int | None = None):
    if is_terminal(p.lhs) or p.lhs == EPSILON:
        raise GrammarError(f"terminal {p.lhs!r} on left-hand side", line, column)
    if len(p.rhs) > 1 and any(is_terminal(s) for s in p.rhs):
        raise GrammarError(f"mixed terminal/nonterminal rhs in {p}", line, column)
    if EPSILON in p.rhs:
        raise GrammarError(f"epsilon must stand alone in {p.lhs} -> ...", line, column)
    if p.is_epsilon and p.lhs != start:
        raise GrammarError(f"epsilon production on non-start symbol {p.lhs!r}", line, column)


def parse_grammar(text: str) -> PositionGrammar:
    """Read a grammar from its file format, expanding ``|`` alternations."""
    start = None
    pending: list[tuple[Production, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        header = re.match(r"\s*start\s*:\s*(\S*)\s*$", line)
        if header:
            name = header.group(1)
            if not name or not _SYMBOL.fullmatch(name) or is_terminal(name) or name == EPSILON:
                raise GrammarError(f"bad start symbol {name!r}", lineno, line.index(":") + 2)
            start = name
            continue
        if "->" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise GrammarError("expected 'LHS -> rhs'", lineno, col)
        lhs_text, rhs_text = line.split("->", 1)
        lhs = lhs_text.strip()
        if not _SYMBOL.fullmatch(lhs):
            raise GrammarError(f"bad left-hand side {lhs!r}", lineno, len(lhs_text) - len(lhs_text.lstrip()) + 1)
        if is_terminal(lhs) or lhs == EPSILON:
            raise GrammarError(f"terminal {lhs!r} on left-hand side", lineno, len(lhs_text) - len(lhs_text.lstrip()) + 1)
        offset = len(lhs_text) + 2
        for alt in rhs_text.split("|"):
            col = offset + len(alt) - len(alt.lstrip()) + 1
            symbols = alt.split()
            if not symbols:
                raise GrammarError("empty alternative (write 'e' for epsilon)", lineno, col)
            for sym in symbols:
                if not _SYMBOL.fullmatch(sym):
                    raise GrammarError(f"bad symbol {sym!r}", lineno, offset + alt.index(sym) + 1)
            if symbols == [EPSILON]:
                symbols = []
            pending.append((Production(lhs, tuple(symbols)), lineno, col))
            offset += len(alt) + 1
    if not pending:
        raise GrammarError("grammar has no productions")
    start = start or pending[0][0].lhs
    for prod, lineno, col in pending:
        _check_production(prod, start, lineno, col)
    return PositionGrammar(tuple(p for p, _, _ in pending), start)


def render_grammar(g: PositionGrammar) -> str:
    """Write a grammar back out; alternatives with the same lhs share a line."""
    lines = [f"start: {g.start}"]
    order: list[str] = []
    alts: dict[str, list[str]] = {}
    for p in g.productions:
        if p.lhs not in alts:
            order.append(p.lhs)
            alts[p.lhs] = []
        alts[p.lhs].append(" ".join(p.rhs) if p.rhs else EPSILON)
    for lhs in order:
        lines.append(f"{lhs} -> {' | '.join(alts[lhs])}")
    return "\n".join(lines) + "\n"


def validate(g: PositionGrammar) -> list[str]:
    """Return one finding per violated well-formedness condition."""
    findings = []
    for p in g.productions:
        try:
            _check_production(p, g.start)
        except GrammarError as exc:
            findings.append(f"terminal misuse: {exc}")

    productive: set[str] = set()
    changed = True
    while changed:
        changed = False
        for p in g.productions:
            if p.lhs in productive:
                continue
            if all(is_terminal(s) or s in productive for s in p.rhs):
                productive.add(p.lhs)
                changed = True

    reachable = {g.start}
    frontier = [g.start]
    while frontier:
        lhs = frontier.pop()
        for p in g.productions_for(lhs):
            for s in p.rhs:
                if not is_terminal(s) and s not in reachable:
                    reachable.add(s)
                    frontier.append(s)

    for nt in g.nonterminals:
        if nt not in productive:
            findings.append(f"unproductive: {nt}")
    for nt in g.nonterminals:
        if nt not in reachable:
            findings.append(f"unreachable: {nt}")
    return findings


def derive_categories(g: PositionGrammar) -> list[CellCategory]:
    """Nonterminals in declaration order, then proper rhs prefixes of length >= 2."""
    cats = [nonterminal(nt) for nt in g.nonterminals]
    seen = set(cats)
    for p in g.productions:
        for k in range(2, len(p.rhs)):
            cat = CellCategory(p.rhs[:k], is_prefix=True)
            if cat not in seen:
                seen.add(cat)
                cats.append(cat)
    return cats


class BinaryRule(NamedTuple):
    left: CellCategory
    right: CellCategory
    target: CellCategory
    # None when the target is a prefix category (no production completes)
    production: Production | None


class WrapRule(NamedTuple):
    child: CellCategory
    target: CellCategory
    production: Production


class TerminalRule(NamedTuple):
    target: CellCategory
    terminal: str
    production: Production


class EpsilonRule(NamedTuple):
    target: CellCategory
    production: Production


class RuleTables(NamedTuple):
    binary: list[BinaryRule]
    wrap: list[WrapRule]
    terminal: list[TerminalRule]
    epsilon: list[EpsilonRule]


def completion_rules(g: PositionGrammar) -> RuleTables:
    """Left-binarize every production into chart combination rules."""
    binary: list[BinaryRule] = []
    seen = set()
    wrap, terminal, epsilon = [], [], []
    for p in g.productions:
        target = nonterminal(p.lhs)
        if p.is_epsilon:
            epsilon.append(EpsilonRule(target, p))
        elif p.is_terminal:
            terminal.append(TerminalRule(target, p.rhs[0], p))
        elif p.is_unary:
            wrap.append(WrapRule(nonterminal(p.rhs[0]), target, p))
        else:
            k = len(p.rhs)
            for j in range(2, k + 1):
                left = nonterminal(p.rhs[0]) if j == 2 else CellCategory(p.rhs[: j - 1], True)
                right = nonterminal(p.rhs[j - 1])
                if j == k:
                    rule = BinaryRule(left, right, target, p)
                else:
                    rule = BinaryRule(left, right, CellCategory(p.rhs[:j], True), None)
                if rule not in seen:
                    seen.add(rule)
                    binary.append(rule)
    return RuleTables(binary, wrap, terminal, epsilon)
