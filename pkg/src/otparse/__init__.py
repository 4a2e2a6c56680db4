"""Optimal structural descriptions for Optimality Theory grammars with
context-free position structures."""

from importlib import resources

from .chart import (
    MARKER,
    Chart,
    Node,
    PartialDescription,
    Position,
    Underparsed,
    blocks_in_fill_order,
    new_chart,
    surface_form,
)
from .constraints import (
    ConstraintSystem,
    MarkVector,
    Ranking,
    assess,
    combine,
    compare,
    parse_constraint_spec,
)
from .engine import DEFAULT_BACKEND, ParseResult, Parser, compute_base_structures, parse
from .grammar import PositionGrammar, derive_categories, parse_grammar, validate

__all__ = [
    "MARKER", "Chart", "Node", "PartialDescription", "Position", "Underparsed",
    "blocks_in_fill_order", "new_chart", "surface_form", "ConstraintSystem",
    "MarkVector", "Ranking", "assess", "combine", "compare", "parse_constraint_spec",
    "DEFAULT_BACKEND", "ParseResult", "Parser", "compute_base_structures", "parse",
    "PositionGrammar", "derive_categories", "parse_grammar", "validate",
    "load_example", "example_parser",
]


def load_example(name: str = "syllable"):
    """Bundled grammar/constraint files: returns (grammar, system, ranking)."""
    data = resources.files(__package__) / "data"
    grammar = parse_grammar((data / f"{name}.grammar").read_text(encoding="utf-8"))
    system, ranking = parse_constraint_spec(
        (data / f"{name}.constraints").read_text(encoding="utf-8"), grammar.terminals
    )
    return grammar, system, ranking


def example_parser(name: str = "syllable", **kwargs) -> Parser:
    return Parser(*load_example(name), **kwargs)
