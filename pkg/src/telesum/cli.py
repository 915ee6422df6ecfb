"""Command-line front end: ``telesum reduce|specialize|telescope|verify|corpus``.

Exit codes: 0 success, 1 verification failure or no solution, 2 unsupported
input, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .corpus import get_entry, load_corpus, run_corpus
from .errors import TelesumError, UnsupportedError
from .expr import ExprError, parse, print_expr
from .oracle import CheckReport, check_identity
from .reduce import (ReductionResult, SpecializationFailure, SpecializedIdentity, reduce_generic,
                     specialize)
from .telescope import telescope_pieces

EXIT_OK, EXIT_FAIL, EXIT_UNSUPPORTED, EXIT_USAGE = 0, 1, 2, 3
FORMATS = ("plain", "latex", "json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def split_top_level(text: str) -> list[str]:
    """Split on commas that are not nested inside parentheses or brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _grid(text: str) -> tuple[int, int]:
    try:
        a, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected A,N (two integers)") from None
    if a < 0 or n < 0:
        raise argparse.ArgumentTypeError("grid bounds must be nonnegative")
    return a, n


def _emit(out, fmt: str, plain: str, latex: str | None, data) -> None:
    if fmt == "json":
        out.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    elif fmt == "latex":
        out.write((latex if latex is not None else plain) + "\n")
    else:
        out.write(plain + "\n")


def _read_json_arg(text: str):
    """A JSON artifact given as a path, ``-`` for stdin, or inline JSON."""
    if text == "-":
        return json.load(sys.stdin)
    if text.lstrip().startswith("{"):
        return json.loads(text)
    path = Path(text)
    if path.is_file():
        return json.loads(path.read_text(encoding="utf-8"))
    return None


# -- commands ---------------------------------------------------------------


def _result_text(r: ReductionResult, fmt: str) -> str:
    lines = [f"{print_expr(r.lhs, fmt)} = {print_expr(r.closed_form, fmt)}"]
    for c in r.constraints:
        params = f"  (parameters: {', '.join(c.params)})" if c.params else ""
        lines.append(f"constraint: {c.format(fmt)}{params}")
    lines.append(f"case: {r.case}")
    return "\n".join(lines)


def cmd_reduce(args, out) -> int:
    r = reduce_generic(args.expr, args.extract_constraints, simple=args.simple_sums, seed=args.seed)
    _emit(out, args.format, _result_text(r, "plain"), _result_text(r, "latex"), r.to_json())
    return EXIT_OK


def _identity_text(s: SpecializedIdentity, fmt: str) -> str:
    lines = [f"{print_expr(s.lhs, fmt)} = {print_expr(s.rhs, fmt)}"]
    for name, value in s.constants.items():
        lines.append(f"{name} = {value}")
    for sym, sol in s.solutions.items():
        lines.append(f"{sym}[k] = {print_expr(sol, fmt)}")
    if s.provisos:
        lines.append("provided " + ", ".join(s.provisos))
    return "\n".join(lines)


def cmd_specialize(args, out) -> int:
    data = _read_json_arg(args.result)
    if data is not None:
        result = ReductionResult.from_json(data)
    else:
        result = reduce_generic(args.result, args.extract_constraints, seed=args.seed)
    try:
        s = specialize(result, args.atom, args.symbol, seed=args.seed)
    except SpecializationFailure as exc:
        msg = f"no solution: {exc} ({exc.constraint.format()})"
        _emit(out, args.format, msg, None, {"status": "no_solution", "message": str(exc),
                                             "constraint": exc.constraint.to_json()})
        return EXIT_FAIL
    _emit(out, args.format, _identity_text(s, "plain"), _identity_text(s, "latex"), s.to_json())
    return EXIT_OK


def cmd_telescope(args, out) -> int:
    texts = [p for chunk in args.pieces for p in split_top_level(chunk)]
    pieces = [parse(p) for p in texts]
    r = telescope_pieces(pieces, args.var)
    if r is None:
        _emit(out, args.format, "no solution", None, {"status": "no_solution", "pieces": texts})
        return EXIT_FAIL
    names = ["c"] + [f"c{i}" for i in range(1, len(r.constants))]
    consts = dict(zip(names, r.constants))

    def text(fmt):
        lines = [f"{name} = {value}" for name, value in consts.items()]
        lines.append(f"g = {print_expr(r.g, fmt)}")
        return "\n".join(lines)

    data = {"status": "solved", "constants": {k: str(v) for k, v in consts.items()},
            "certificate": print_expr(r.g), "certificate_tree": json.loads(print_expr(r.g, "json"))}
    _emit(out, args.format, text("plain"), text("latex"), data)
    return EXIT_OK


def _report(out, fmt: str, label: str, report: CheckReport) -> int:
    _emit(out, fmt, f"{label}: {report.summary()}", None, {"identity": label, **report.to_json()})
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args, out) -> int:
    ident = args.identity
    if ident.startswith("corpus:"):
        try:
            entry = get_entry(ident.split(":", 1)[1])
        except KeyError:
            raise UsageError(f"no corpus entry {ident!r}") from None
        return _report(out, args.format, entry.id, entry.verify(args.grid, args.seed))
    ranges = {"a": range(args.grid[0] + 1), "n": range(args.grid[1] + 1)}
    data = _read_json_arg(ident)
    if data is not None:
        s = SpecializedIdentity.from_json(data)
        report = check_identity(s.lhs, s.rhs, ranges, provisos=tuple(s.provisos) + tuple(args.proviso),
                                seed=args.seed)
        return _report(out, args.format, print_expr(s.lhs), report)
    if "=" not in ident:
        raise UsageError("identity must be corpus:ID, a JSON artifact, or 'LHS = RHS'")
    lhs_text, rhs_text = ident.split("=", 1)
    lhs, rhs = parse(lhs_text), parse(rhs_text)
    report = check_identity(lhs, rhs, ranges, provisos=args.proviso, seed=args.seed)
    return _report(out, args.format, ident.strip(), report)


def cmd_corpus(args, out) -> int:
    code = EXIT_OK
    rows = []
    for entry, report, seconds in run_corpus(load_corpus(), args.grid, args.seed, args.filter):
        if not report.passed:
            code = EXIT_FAIL
        rows.append((entry, report, seconds))
        if args.format != "json":
            out.write(f"{entry.id:24s} {report.summary()}  [{seconds:.2f}s]\n")
    if not rows:
        raise UsageError(f"no corpus entry matches {args.filter!r}")
    if args.format == "json":
        data = [{"id": e.id, "seconds": round(t, 3), **r.to_json()} for e, r, t in rows]
        out.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return code


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="oracle seed (default: $TELESUM_SEED or 20181)")

    p = _Parser(prog="telesum", description="Simplify generic double sums by telescoping.")
    p.add_argument("--format", choices=FORMATS, default="plain")
    p.add_argument("--seed", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("reduce", parents=[common], help="reduce a generic double sum")
    r.add_argument("expr")
    r.add_argument("--extract-constraints", type=int, default=1, metavar="N")
    r.add_argument("--simple-sums", action="store_true", help="split and pull factors out of sums")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("specialize", parents=[common], help="plug a concrete atom into a reduction")
    s.add_argument("result", help="reduction JSON (path, '-' or inline) or a double sum to reduce first")
    s.add_argument("--atom", required=True, help="concrete sequence in k, e.g. 'binom(n,k)'")
    s.add_argument("--symbol", default="X")
    s.add_argument("--extract-constraints", type=int, default=1, metavar="N")
    s.set_defaults(func=cmd_specialize)

    t = sub.add_parser("telescope", parents=[common], help="parameterized telescoping of pieces")
    t.add_argument("--pieces", nargs="+", required=True, metavar="P1,P2,...")
    t.add_argument("--var", default="k")
    t.set_defaults(func=cmd_telescope)

    v = sub.add_parser("verify", parents=[common], help="check an identity on a grid")
    v.add_argument("identity", help="corpus:ID, a specialization JSON, or 'LHS = RHS'")
    v.add_argument("--grid", type=_grid, default=(12, 12), metavar="A,N")
    v.add_argument("--proviso", action="append", default=[])
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("corpus", parents=[common], help="verify the shipped corpus")
    c.add_argument("--filter", default=None, metavar="ID")
    c.add_argument("--grid", type=_grid, default=(12, 12), metavar="A,N")
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (UsageError, ExprError) as exc:
        print(f"telesum: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedError as exc:
        print(f"telesum: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except TelesumError as exc:
        print(f"telesum: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
