"""Command-line interface: ``otparse {parse,verify,trace,typology}``.

Results go to stdout and diagnostics to stderr.  Exit status is 0 on
success, 1 when the grammar or constraint files cannot be loaded (or a
verification disagrees), 2 for an input segment outside the alphabet and
3 when an instance is too large for the oracle.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from importlib import resources
from pathlib import Path

from .chart import MARKER, Node, Position, Underparsed, blocks_in_fill_order, cell_name, render_items, trace_line
from .constraints import ConstraintSpecError, RankingError, parse_constraint_spec
from .engine import CyclePreconditionError, NoDescriptionError, Parser, UnknownSegmentError
from .grammar import GrammarError, parse_grammar
from .oracle import InstanceTooLargeError, canonical, factorial_typology, is_candidate, oracle_best, typology_report

EXIT_OK, EXIT_LOAD, EXIT_SEGMENT, EXIT_TOO_LARGE = 0, 1, 2, 3


class LoadError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grammar", metavar="PATH", help="position grammar file (default: bundled syllable grammar)")
    common.add_argument("--constraints", metavar="PATH", help="constraint/ranking file (default: bundled example)")
    common.add_argument("--input", action="append", default=[], metavar="STR", help="input string; may repeat")
    common.add_argument("--inputs", metavar="FILE", help="file with one input per line")
    common.add_argument("--marker", default=MARKER, help="symbol printed for unfilled positions")
    common.add_argument("--verbose", action="store_true", help="show filled positions as pos/SEG")
    common.add_argument("--format", choices=["table", "tsv", "json"], default="table")
    common.add_argument("--backend", choices=["python", "compiled"], default=None)

    top = argparse.ArgumentParser(prog="otparse", description="Optimal structural descriptions by chart parsing.")
    sub = top.add_subparsers(dest="command", required=True)
    p = sub.add_parser("parse", parents=[common], help="print the optimal description of each input")
    p.add_argument("--trace", action="store_true", help="also write the chart trace to stderr")
    v = sub.add_parser("verify", parents=[common], help="check the parser against brute-force search")
    v.add_argument("--bound", type=int, default=None, help="max unfilled positions for the oracle")
    v.add_argument("--max-length", type=int, default=None, help="verify every input up to this length")
    sub.add_parser("trace", parents=[common], help="print every chart update in fill order")
    sub.add_parser("typology", parents=[common], help="group total rankings by the surface forms they yield")
    return top


def load(args):
    try:
        if args.grammar:
            grammar_text = Path(args.grammar).read_text(encoding="utf-8")
        else:
            grammar_text = (resources.files("otparse") / "data" / "syllable.grammar").read_text(encoding="utf-8")
        if args.constraints:
            cons_text = Path(args.constraints).read_text(encoding="utf-8")
        else:
            cons_text = (resources.files("otparse") / "data" / "syllable.constraints").read_text(encoding="utf-8")
        grammar = parse_grammar(grammar_text)
        system, ranking = parse_constraint_spec(cons_text, grammar.terminals)
    except (OSError, GrammarError, ConstraintSpecError, RankingError) as exc:
        raise LoadError(str(exc)) from exc
    return grammar, system, ranking


def collect_inputs(args, alphabet=None) -> list[str]:
    inputs = list(args.input)
    if args.inputs:
        try:
            lines = Path(args.inputs).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise LoadError(str(exc)) from exc
        inputs += [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if getattr(args, "max_length", None) is not None and alphabet:
        for n in range(1, args.max_length + 1):
            inputs += [" ".join(w) for w in itertools.product(alphabet, repeat=n)]
    return inputs


def tree_json(item):
    if isinstance(item, Underparsed):
        return {"underparsed": item.segment, "index": item.index}
    if isinstance(item, Position):
        return {"position": item.symbol, "segment": item.segment, "index": item.index}
    return {"label": item.label, "children": [tree_json(c) for c in item.children]}


def shown(text: str) -> str:
    return text.replace(" ", "")


def cmd_parse(args, grammar, system, ranking, out, err) -> int:
    parser = Parser(grammar, system, ranking)
    order = ranking.names
    rows = []
    for text in collect_inputs(args):
        result = parser.parse(text, args.marker, backend=args.backend)
        run = result.run
        rows.append((text, result, run))
        if args.trace:
            for line in trace_lines(run, order, args.marker):
                print(line, file=err)
    if args.format == "json":
        payload = [
            {
                "input": shown(text),
                "tree": tree_json(r.description.trees[0]),
                "underparsed": [tree_json(i) for i in r.description.items if isinstance(i, Underparsed)],
                "marks": dict(r.marks),
                "surface": r.surface,
                "passes": [{"block": [a, c], "passes": n} for (a, c), n in sorted(run.passes.items(), key=_block_order)],
                "base_passes": run.base_passes,
            }
            for text, r, run in rows
        ]
        print(json.dumps(payload if len(payload) != 1 else payload[0], ensure_ascii=False, indent=2), file=out)
        return EXIT_OK
    if args.format == "tsv":
        print("input\ttree\tmarks\tsurface", file=out)
    for n, (text, r, _) in enumerate(rows):
        tree = render_items(r.description.items, args.marker, args.verbose)
        marks = r.marks.format(order)
        if args.format == "tsv":
            print(f"{shown(text)}\t{tree}\t{marks}\t{r.surface}", file=out)
        else:
            if n:
                print(file=out)
            print(f"input    /{shown(text)}/", file=out)
            print(f"tree     {tree}", file=out)
            print(f"marks    {marks}", file=out)
            print(f"surface  {r.surface}", file=out)
    return EXIT_OK


def _block_order(item):
    (a, c), _ = item
    return (c - a, a)


def trace_lines(run, order, marker=MARKER) -> list[str]:
    """Chart updates grouped by block in fill order, each block closed by its pass count."""
    lines = []
    log = run.log
    for d in log:
        if d.start is None:
            lines.append(trace_line(d, order, marker))
    lines.append(f"base passes={run.base_passes}")
    by_block: dict = {}
    for d in log:
        if d.start is not None:
            by_block.setdefault((d.start, d.end), []).append(d)
    for a, c in blocks_in_fill_order(run.length):
        for d in by_block.get((a, c), ()):
            lines.append(trace_line(d, order, marker))
        lines.append(f"block [{a},{c}] passes={run.passes.get((a, c), 0)}")
    final = run.result
    if final is not None and run.length:
        lines.append("result " + trace_line(final, order, marker))
    return lines


def cmd_trace(args, grammar, system, ranking, out, err) -> int:
    parser = Parser(grammar, system, ranking)
    order = ranking.names
    inputs = collect_inputs(args)
    for n, text in enumerate(inputs):
        run = parser.run(text, backend=args.backend)
        if args.format == "json":
            payload = {
                "input": shown(text),
                "updates": [
                    {"cell": cell_name(d), "op": d.op, "marks": dict(d.marks), "tree": d.render(args.marker)}
                    for d in run.log
                ],
                "passes": [{"block": [a, c], "passes": k} for (a, c), k in sorted(run.passes.items(), key=_block_order)],
                "base_passes": run.base_passes,
            }
            print(json.dumps(payload, ensure_ascii=False, indent=2), file=out)
            continue
        if len(inputs) > 1:
            print(f"# /{shown(text)}/", file=out)
        for line in trace_lines(run, order, args.marker):
            print(line.replace(" <- ", "\t").replace(" marks=", "\t").replace(" tree=", "\t") if args.format == "tsv" else line, file=out)
    return EXIT_OK


def cmd_verify(args, grammar, system, ranking, out, err) -> int:
    parser = Parser(grammar, system, ranking)
    order = ranking.names
    inputs = collect_inputs(args, [s.symbol for s in system.alphabet])
    agree = 0
    for text in inputs:
        segments = parser.tokenize(text)
        result = parser.parse(segments, args.marker, backend=args.backend)
        best, winners = oracle_best(segments, grammar, system, ranking, bound=args.bound)
        ok = (
            best is not None
            and ranking.compare(result.marks, best) == 0
            and not is_candidate(result.description, segments, grammar)
            and canonical(result.description) in {canonical(w) for w in winners}
        )
        agree += ok
        status = "OK" if ok else "MISMATCH"
        line = f"/{shown(text)}/\t{status}\tengine={result.marks.format(order)}\toracle={best.format(order) if best is not None else '-'}"
        print(line if args.format == "tsv" else line.replace("\t", "  "), file=out)
    print(f"{agree}/{len(inputs)} OK", file=out)
    return EXIT_OK if agree == len(inputs) else EXIT_LOAD


def cmd_typology(args, grammar, system, ranking, out, err) -> int:
    inputs = collect_inputs(args)
    typ = factorial_typology([shown(i) for i in inputs], grammar, system, marker=args.marker)
    print(typology_report(typ, args.format), file=out)
    return EXIT_OK


COMMANDS = {"parse": cmd_parse, "verify": cmd_verify, "trace": cmd_trace, "typology": cmd_typology}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        grammar, system, ranking = load(args)
        return COMMANDS[args.command](args, grammar, system, ranking, out, err)
    except LoadError as exc:
        print(f"otparse: cannot load: {exc}", file=err)
        return EXIT_LOAD
    except (CyclePreconditionError, GrammarError, ValueError) as exc:
        if isinstance(exc, UnknownSegmentError):
            print(f"otparse: {exc}", file=err)
            return EXIT_SEGMENT
        if isinstance(exc, InstanceTooLargeError):
            print(f"otparse: {exc}", file=err)
            return EXIT_TOO_LARGE
        print(f"otparse: {exc}", file=err)
        return EXIT_LOAD
    except NoDescriptionError as exc:
        print(f"otparse: {exc}", file=err)
        return EXIT_LOAD


if __name__ == "__main__":
    sys.exit(main())
