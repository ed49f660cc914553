"""Check, run and soundness-test every corpus program; print a table."""

from pathlib import Path

from etr.eval import evaluate
from etr.sexpr import ParseError, parse_program, pretty
from etr.soundness import check_soundness
from etr.stack import run_deep
from etr.typecheck import TypeCheckError, check_program, display

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "corpus"


def row(path: Path) -> str:
    try:
        prog = parse_program(path.read_text())
    except ParseError as err:
        return f"{path.stem:30} parse error {err.line}:{err.col}"
    try:
        out = check_program(prog)
    except TypeCheckError as err:
        forced = evaluate({}, prog)
        what = forced.error.kind if forced.error else pretty(forced.value)
        return f"{path.stem:30} {err.code} {err.line}:{err.col}  (forced: {what})"
    value = pretty(evaluate({}, out.program).value)
    sound = "ok" if check_soundness(prog, deep=True).ok else "VIOLATION"
    return f"{path.stem:30} {display(pretty(out.type)):22} {value:20} {sound}"


if __name__ == "__main__":
    for p in sorted(CORPUS.glob("*.etr")):
        print(run_deep(row, p))
