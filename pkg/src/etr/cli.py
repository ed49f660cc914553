"""The ``etr`` command: check, run and fuzz ``.etr`` programs.

Exit codes: 0 ok, 1 type error, 2 parse/IO/usage error, 3 stuck,
4 fuel exhausted, 5 soundness violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .eval import DEFAULT_FUEL, evaluate
from .sexpr import ParseError, parse_program, pretty
from .stack import run_deep
from .typecheck import TypeCheckError, check_program, diagnostic, display

OK, TYPE_ERROR, USAGE, STUCK, FUEL, VIOLATION = 0, 1, 2, 3, 4, 5


def _color(code: str, text: str) -> str:
    if os.environ.get("ETR_COLOR", "0") != "1":
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _say_error(path: str, diag: dict, kind: str = "error") -> None:
    where = f"{path}:{diag['line']}:{diag['col']}" if diag.get("line") else path
    print(f"{where}: {_color('31', kind)} [{diag['code']}] {diag['message']}", file=sys.stderr)


def _load(path: str):
    """Parse a file; returns (program, None) or (None, diagnostic)."""
    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as err:
        return None, {"code": "io-error", "message": str(err), "line": None, "col": None}
    try:
        return parse_program(source), None
    except ParseError as err:
        return None, {"code": "parse-error", "message": err.message, "line": err.line, "col": err.col}


def cmd_check(args) -> int:
    prog, diag = _load(args.file)
    if diag is not None:
        return _report_check(args, "parse-error", None, [diag], USAGE)
    try:
        out = check_program(prog)
    except TypeCheckError as err:
        return _report_check(args, "type-error", None, [diagnostic(err)], TYPE_ERROR)
    if args.verbose and not args.json:
        print("result: " + display(pretty(out.result)))
        print("type variables: " + (" ".join(display(v) for v in out.fresh_vars) or "none"))
    return _report_check(args, "ok", display(pretty(out.type)), [], OK)


def _report_check(args, status: str, type_text, diags: list, code: int) -> int:
    if args.json:
        print(json.dumps({"status": status, "type": type_text, "diagnostics": diags}, sort_keys=True))
        return code
    if type_text is not None:
        print(type_text)
    for d in diags:
        _say_error(args.file, d)
    return code


def cmd_run(args) -> int:
    prog, diag = _load(args.file)
    if diag is not None:
        _say_error(args.file, diag)
        return USAGE
    target = prog
    try:
        target = check_program(prog).program
    except TypeCheckError as err:
        if not args.unsafe:
            _say_error(args.file, diagnostic(err))
            return TYPE_ERROR
        _say_error(args.file, diagnostic(err), "warning")
    out = evaluate({}, target, fuel=args.fuel)
    if out.ok:
        print(pretty(out.value))
        return OK
    err = out.error
    loc = err.loc or (None, None)
    _say_error(args.file, {"code": err.kind, "message": err.detail or err.kind, "line": loc[0], "col": loc[1]},
               "stuck")
    return FUEL if err.kind == "fuel" else STUCK


def cmd_fuzz(args) -> int:
    from .soundness import run_fuzz
    report = run_fuzz(args.count, args.size, args.seed, fuel=args.fuel, deep=args.deep)
    if args.json:
        print(json.dumps(report.to_json(), sort_keys=True))
    else:
        text = report.to_text()
        last = "result: OK" if report.ok else "result: VIOLATIONS FOUND"
        print(text.removesuffix(last) + _color("32" if report.ok else "31", last))
    return OK if report.ok else VIOLATION


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="etr", description="Check, run and fuzz lambda-ETR programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="type-check a program")
    c.add_argument("file")
    c.add_argument("--json", action="store_true", help="machine-readable output")
    c.add_argument("--verbose", action="store_true", help="show the full result and type variables")
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("run", help="check then evaluate a program")
    r.add_argument("file")
    r.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    r.add_argument("--unsafe", action="store_true", help="evaluate even if the program is ill-typed")
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("fuzz", help="soundness fuzzing over generated programs")
    f.add_argument("--count", type=_positive, default=100)
    f.add_argument("--size", type=_positive, default=20)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL)
    f.add_argument("--deep", action="store_true", help="also test every intermediate node")
    f.add_argument("--json", action="store_true")
    f.set_defaults(func=cmd_fuzz)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_deep(args.func, args)


if __name__ == "__main__":
    sys.exit(main())
