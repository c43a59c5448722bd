"""Command-line validator.

Exit codes: 0 clean, 1 contradictions or violations found, 2 parse or usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import causal, classification, compositional
from .core_model import Diagnostic, KBError, check_instantiation
from .kbformat import ParseError, parse_file, serialize
from .report import Report
from .state import contradiction_diagnostics

FLAGS = ("extended-simple", "parthood-realization", "strict-participation", "exclusive-determinates")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="knowledge base in the procid text format")
    for flag in FLAGS:
        p.add_argument(f"--{flag}", action="store_true", help=f"enable the {flag} option")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="procid", description="Process identity validator.")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("check", help="validate, saturate, and check decomposition and realization"))
    _common(sub.add_parser("classify", help="derive process categories"))
    p = sub.add_parser("identity", help="saturate identities under one criterion")
    _common(p)
    p.add_argument("--criterion", choices=compositional.CRITERIA, default="compositional")
    _common(sub.add_parser("compare", help="tabulate C1/C2/A5/compositional verdicts per process pair"))
    p = sub.add_parser("history", help="check a history against its bearer's region")
    _common(p)
    p.add_argument("--history", required=True, dest="history_id")
    p.add_argument("--bearer", required=True)
    _common(sub.add_parser("expand", help="apply quality expansion and print the resulting KB"))
    return parser


def _run(args) -> Report | str:
    options = [f for f in FLAGS if getattr(args, f.replace("-", "_"))]
    kb, diags = parse_file(args.file, options)

    if args.command == "expand":
        new, _ = classification.expand_qualities(kb)
        return serialize(new)

    if args.command == "classify":
        diags += classification.classification_diagnostics(kb)
        diags += classification.check_pdh(kb)
        return Report(diags)

    if args.command == "identity":
        state, found = compositional.saturate(kb, args.criterion)
        return Report(diags + found, state.eq_classes())

    if args.command == "compare":
        states = causal.criterion_states(kb)
        rows = [r.to_dict() for r in causal.compare_criteria(kb, states)]
        for st in states.values():
            diags += contradiction_diagnostics(st)
        return Report(diags, states["compositional"].eq_classes(), rows)

    state, found = compositional.saturate(kb)
    if args.command == "history":
        try:
            diags += causal.history_check(kb, state, args.history_id, args.bearer)
        except KBError as exc:
            # a wrong --history/--bearer is a usage error; a missing region is a finding
            if exc.code != "MISSING_OSTR":
                raise
            diags.append(Diagnostic(exc.code, (args.history_id,), exc.message))
        diags += contradiction_diagnostics(state)
        return Report(diags, state.eq_classes())

    diags += found
    diags += classification.check_pdh(kb, state)
    diags += classification.check_a4(kb, state)
    diags += classification.check_participation(kb)
    diags += check_instantiation(kb, state)
    return Report(diags, state.eq_classes())


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        result = _run(args)
    except ParseError as exc:
        for d in exc.diagnostics:
            print(f"{d.span}: PARSE_ERROR: {d.message}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"procid: {exc}", file=sys.stderr)
        return 2
    except KBError as exc:
        print(f"procid: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, str):
        sys.stdout.write(result)
        return 0
    sys.stdout.write(result.to_json() if args.format == "json" else result.to_text())
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
