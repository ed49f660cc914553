"""Acceptance gates 1-9.  Each test prints one PASS/FAIL line; the lines are
also repeated in the pytest terminal summary.  Run this file directly to
see just the gates: ``python3 tests/test_acceptance.py``."""

from __future__ import annotations

import contextlib
import itertools
import random
import subprocess
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from etr.eval import evaluate
from etr.generator import generate_program
from etr.logic import TypeEnv
from etr.sexpr import parse_program, pretty
from etr.soundness import check_soundness, features
from etr.subtyping import subtype
from etr.syntax import BOTTOM, NAT, TOP, HasPropT, UnionT, arrow, result
from etr.typecheck import PropertyRedeclared, TypeMismatch, check_program, display

from helpers import BARE, CORPUS, PARSEABLE, POINT, T, WELL_TYPED, program, random_type

LINES: list[str] = []


@contextlib.contextmanager
def criterion(n: int, title: str):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - start:.2f}s) {title}"
        LINES.append(line)
        print(line)


def source_at(name: str, line: int, col: int) -> str:
    return (CORPUS / f"{name}.etr").read_text().splitlines()[line - 1][col - 1:]


def test_1_worked_example():
    with criterion(1, "worked example checks as Nat and evaluates to 3 in < 1 s"):
        start = time.perf_counter()
        out = check_program(program("worked_example"))
        value = evaluate({}, out.program).value
        elapsed = time.perf_counter() - start
        assert display(pretty(out.type)) == "Nat"
        assert pretty(value) == "3"
        assert elapsed < 1.0


def test_2_generativity():
    with criterion(2, "listing 1 rejected at (foo-a y); listing 2 rejected at the inner "
                      "let-struct-property; --unsafe gives apply-non-function"):
        try:
            check_program(program("generativity_struct"))
            raise AssertionError("listing 1 accepted")
        except TypeMismatch as err:
            assert source_at("generativity_struct", err.line, err.col).startswith("(foo-a y)")
        try:
            check_program(program("generativity_property"))
            raise AssertionError("listing 2 accepted")
        except PropertyRedeclared as err:
            at = source_at("generativity_property", err.line, err.col)
            assert at.startswith("(let-struct-property ((p-desc2")
        proc = subprocess.run([sys.executable, "-m", "etr", "run", "--unsafe",
                               str(CORPUS / "generativity_property.etr")], capture_output=True, text=True)
        assert proc.returncode == 3
        assert "[apply-non-function]" in proc.stderr


def test_3_receiver_swap():
    with criterion(3, "receiver swap rejected while the original is accepted"):
        assert display(pretty(check_program(program("worked_example")).type)) == "Nat"
        try:
            check_program(program("receiver_swap"))
            raise AssertionError("receiver swap accepted")
        except TypeMismatch:
            pass


def test_4_tables():
    from test_eval import STRUCT_OPS, SMALL_VALUES, expected_delta, expected_delta_s, run
    from etr.eval import delta, delta_s
    with criterion(4, "delta and delta_s exact on enumerations of <= 200 cases"):
        prims = [(op, v) for op in ("not", "add1", "nat?", "bool?", "pair?") for v in SMALL_VALUES]
        ops = [(so, v) for so in STRUCT_OPS for v in SMALL_VALUES]
        assert len(prims) <= 200 and len(ops) <= 200
        assert [c for c in prims if run(delta, *c) != expected_delta(*c)] == []
        assert [c for c in ops if run(delta_s, *c) != expected_delta_s(*c)] == []


def test_5_oracle():
    from test_logic import oracle_mismatches
    with criterion(5, "restrict/remove/update agree with the value-set oracle in < 30 s"):
        start = time.perf_counter()
        assert oracle_mismatches() == []
        assert time.perf_counter() - start < 30


def test_6_fuzz_gate():
    with criterion(6, "etr fuzz --count 10000 --size 25 --seed 0 exits 0 in < 5 min"):
        start = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "etr", "fuzz", "--count", "10000", "--size", "25",
                               "--seed", "0"], capture_output=True, text=True)
        elapsed = time.perf_counter() - start
        print(proc.stdout.splitlines()[0] if proc.stdout else proc.stderr)
        assert proc.returncode == 0, proc.stdout[-2000:]
        assert elapsed < 300


EVERY_FORM = {"Var", "NatLit", "BoolLit", "Prim", "Lam", "App", "If", "Let", "Cons", "Proj",
              "LetStruct", "LetProp", "extraction"}


def test_7_lemma_clauses_on_corpus():
    with criterion(7, f"lemma clauses hold at every node of {len(WELL_TYPED)} corpus programs"):
        assert len(WELL_TYPED) >= 30
        seen = set()
        for name in WELL_TYPED:
            rep = check_soundness(program(name), deep=True)
            assert rep.ok, (name, rep.to_text())
            seen |= features(program(name))
        assert EVERY_FORM <= seen, EVERY_FORM - seen


def test_8_subtyping():
    with criterion(8, "reflexivity on 1000 types, contravariant arrows, struct pair, union laws"):
        env = TypeEnv().declare("pnorm", T("(-> (x : Self) Nat)"))
        rng = random.Random(0)
        types = [random_type(rng) for _ in range(1000)]
        assert all(subtype(env, t, t) for t in types)
        chain = [BOTTOM, T("True"), T("Bool"), T("(U Nat Bool)"), TOP]
        for (i, a), (j, b) in itertools.product(enumerate(chain), repeat=2):
            assert subtype(env, arrow("x", a, result(NAT)), arrow("x", b, result(NAT))) == (j <= i)
        assert subtype(env, POINT, HasPropT("pnorm"))
        assert not subtype(env, BARE, HasPropT("pnorm"))
        for a, b in zip(types[:500], types[500:]):
            ab, ba = UnionT((a, b)), UnionT((b, a))
            assert subtype(env, a, ab) and subtype(env, b, ab)
            assert subtype(env, ab, ba) and subtype(env, ba, ab)
            assert subtype(env, UnionT((a, a)), a) and subtype(env, BOTTOM, a)


def test_9_round_trip():
    with criterion(9, f"parse . print round trip on {len(PARSEABLE)} corpus files and 1000 generated programs"):
        for name in PARSEABLE:
            e = program(name)
            assert pretty(parse_program(pretty(e))) == pretty(e)
        for seed in range(1000):
            e = generate_program(seed, 1 + seed % 30)
            assert pretty(parse_program(pretty(e))) == pretty(e)


if __name__ == "__main__":
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except Exception:
                failed += 1
    sys.exit(1 if failed else 0)
