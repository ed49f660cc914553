"""Walk through method extraction: check, show the p-acc instantiation,
evaluate, and contrast with the receiver-swap variant."""

from pathlib import Path

from etr.eval import evaluate
from etr.sexpr import parse_program, pretty
from etr.typecheck import TypeCheckError, check_program, display

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "corpus"


def show(name: str) -> None:
    src = (CORPUS / f"{name}.etr").read_text()
    print(f"== {name}\n{src}")
    try:
        out = check_program(parse_program(src))
    except TypeCheckError as err:
        print(f"rejected at {err.line}:{err.col}: {err.message}")
        forced = evaluate({}, parse_program(src))
        print(f"forced evaluation: {forced.error.kind if forced.error else pretty(forced.value)}\n")
        return
    print("result:", display(pretty(out.result)))
    print("fresh type variables:", ", ".join(display(v) for v in out.fresh_vars) or "none")
    print("value:", pretty(evaluate({}, out.program).value), "\n")


if __name__ == "__main__":
    for name in ("worked_example", "receiver_swap", "generativity_struct", "generativity_property"):
        show(name)
