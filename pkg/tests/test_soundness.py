import json

import pytest

from etr import typecheck
from etr.generator import generate_checked, generate_program
from etr.sexpr import parse_program, pretty
from etr.soundness import (
    check_soundness,
    features,
    lemma1_spot,
    run_fuzz,
    satisfies,
    value_has_type,
)
from etr.syntax import (
    FALSE_T,
    NAT,
    TRUE_P,
    TRUE_V,
    HasPropT,
    IsType,
    NatV,
    NotType,
    Obj,
    PairT,
    PairV,
)
from etr.typecheck import Session, check_program

from helpers import POINT, WELL_TYPED, program

EVERY_FORM = {"Var", "NatLit", "BoolLit", "Prim", "Lam", "App", "If", "Let", "Cons", "Proj",
              "LetStruct", "LetProp", "extraction"}


def test_satisfaction_examples():
    assert satisfies({}, TRUE_P)
    assert satisfies({"x": NatV(1)}, IsType(Obj("x"), NAT))
    assert satisfies({"x": NatV(1)}, NotType(Obj("x"), FALSE_T))
    assert not satisfies({"x": NatV(1)}, IsType(Obj("x"), FALSE_T))


def test_value_typing_examples():
    from etr.soundness import Model
    from etr.syntax import StructV
    inst = StructV("point", POINT.stamp, NatV(3), NAT, (("pnorm", NatV(0)),))
    assert value_has_type(NatV(1), NAT)
    declared = Model(Session(properties={"pnorm": NAT}))
    assert value_has_type(inst, HasPropT("pnorm"), declared)
    assert not value_has_type(inst, HasPropT("pnorm"))  # the label must be in scope
    assert not value_has_type(PairV(NatV(1), TRUE_V), PairT(NAT, FALSE_T))


def test_trivial_program_passes_every_clause():
    rep = check_soundness(parse_program("1"), deep=True)
    assert rep.ok and rep.programs_run == 1


def test_worked_example_passes():
    rep = check_soundness(program("worked_example"), deep=True)
    assert rep.ok, rep.to_text()


@pytest.mark.parametrize("name", WELL_TYPED)
def test_lemma_clauses_on_corpus(name):
    """Every evaluated node of every well-typed corpus program satisfies the
    three clauses against the result the checker assigned it."""
    rep = check_soundness(program(name), deep=True)
    assert rep.ok, rep.to_text()


def test_corpus_covers_every_form():
    seen = set()
    for name in WELL_TYPED:
        seen |= features(program(name))
    assert EVERY_FORM <= seen


@pytest.mark.parametrize("name", WELL_TYPED)
def test_environment_facts_hold_at_run_time(name):
    proved, failures = lemma1_spot(program(name))
    assert failures == []


def test_lemma1_spot_proves_something():
    proved, _ = lemma1_spot(program("occurrence_nat"))
    assert proved > 0


# ------------------------------------------------------------ negative controls


def test_label_reuse_is_caught():
    session = Session(allow_label_reuse=True)
    outcome = check_program(program("generativity_property"), session)
    rep = check_soundness(program("generativity_property"), outcome=outcome)
    assert len(rep.stuck_well_typed) == 1
    assert not rep.ok


def test_a_permissive_checker_is_caught(monkeypatch):
    """Accepting every argument must surface as stuck programs."""
    monkeypatch.setattr(typecheck.Checker, "_accepts", lambda self, env, r, t: True)
    rep = run_fuzz(300, 20, seed=0)
    assert rep.stuck_well_typed


def test_forced_negative_corpus_gets_stuck():
    from etr.eval import evaluate
    for name in ("generativity_struct", "generativity_property", "receiver_swap"):
        assert not evaluate({}, program(name)).ok


# ------------------------------------------------------------ generator


def test_generator_small_seed_gives_a_checked_program():
    prog, outcome = generate_checked(0, 1)
    assert outcome is not None
    check_program(prog)


def test_generator_is_deterministic():
    for seed in range(20):
        assert pretty(generate_program(seed, 20)) == pretty(generate_program(seed, 20))
        assert pretty(generate_checked(seed, 20, mutants=True)[0]) == \
            pretty(generate_checked(seed, 20, mutants=True)[0])


def test_generated_programs_check():
    for seed in range(200):
        prog, outcome = generate_checked(seed, 25)
        assert outcome is not None


def test_fuzz_reports_are_byte_identical():
    a = json.dumps(run_fuzz(1, 20, seed=7).to_json(), sort_keys=True)
    b = json.dumps(run_fuzz(1, 20, seed=7).to_json(), sort_keys=True)
    assert a == b
    assert run_fuzz(5, 20, seed=3).to_text() == run_fuzz(5, 20, seed=3).to_text()


def test_small_fuzz_run_is_clean():
    rep = run_fuzz(100, 20, seed=0)
    assert rep.ok, rep.to_text()
    assert rep.programs_run == 100


def test_deep_fuzz_run_is_clean():
    rep = run_fuzz(150, 25, seed=1000, deep=True)
    assert rep.ok, rep.to_text()


def test_generator_reaches_every_form():
    rep = run_fuzz(300, 25, seed=0)
    assert EVERY_FORM <= set(rep.features)
