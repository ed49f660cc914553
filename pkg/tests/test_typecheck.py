import pytest

from etr.eval import evaluate
from etr.sexpr import parse_program, parse_result, parse_type_text, pretty, read_all
from etr.syntax import (
    NAT,
    NULL,
    AccV,
    CtorV,
    HasPropT,
    LetStruct,
    Obj,
    PAccV,
    PPredV,
    PredV,
    StructT,
    walk,
)
from etr.typecheck import (
    FreeVariable,
    PropertyRedeclared,
    Session,
    TypeCheckError,
    TypeMismatch,
    check_program,
    delta_s_type,
    delta_type,
    display,
    erase_label,
    subst_result,
)

from helpers import CASES, POINT, WELL_TYPED, program


def R(text):
    return parse_result(read_all(text)[0])


def checks(src):
    return pretty(check_program(parse_program(src)).result)


# ------------------------------------------------------------ signatures


@pytest.mark.parametrize("op, sig", [
    ("not", "(-> (x : Top) (Bool (in x False) (not-in x False) _))"),
    ("nat?", "(-> (x : Top) (Bool (in x Nat) (not-in x Nat) _))"),
    ("bool?", "(-> (x : Top) (Bool (in x Bool) (not-in x Bool) _))"),
    ("pair?", "(-> (x : Top) (Bool (in x (Pair Top Top)) (not-in x (Pair Top Top)) _))"),
    ("add1", "(-> (x : Nat) (Nat TT FF _))"),
])
def test_primitive_signatures(op, sig):
    assert pretty(delta_type(op)) == sig


def test_struct_operation_signatures():
    assert pretty(delta_s_type(CtorV(POINT, ()))) == "(-> (x : Nat) (point TT FF _))"
    assert pretty(delta_s_type(PredV(POINT))) == "(-> (x : Top) (Bool (in x point) (not-in x point) _))"
    assert pretty(delta_s_type(AccV(POINT))) == "(-> (x : point) Nat)"
    assert pretty(delta_s_type(PPredV("pnorm"))) == \
        "(-> (x : Top) (Bool (in x (Has-Prop pnorm)) (not-in x (Has-Prop pnorm)) _))"
    pacc = delta_s_type(PAccV("pnorm", parse_type_text("(-> (x : Self) Nat)")))
    assert display(pretty(pacc)) == \
        "(Exists (X%self) (-> (x : (Has-Prop pnorm)) ((-> (x : X%self) Nat) (in x X%self) TT _)))"


# ------------------------------------------------------------ substitution


def test_subst_with_object():
    assert pretty(subst_result(R("(Nat (in x Nat) FF _)"), "x", Obj("y"), NAT)) == "(Nat (in y Nat) FF _)"


def test_subst_with_null_object_erases():
    assert subst_result(R("(Nat (in x X) TT _)"), "x", NULL, NAT) == R("Nat")


def test_subst_decides_atoms_against_argument_type():
    r = subst_result(R("(Bool (in x Nat) (not-in x Nat) _)"), "x", NULL, NAT)
    assert pretty(r) == "(Bool TT FF _)"


def test_subst_leaves_unrelated_results():
    r = R("(Nat (in y Nat) FF y)")
    assert subst_result(r, "x", NULL, NAT) == r
    assert subst_result(r, "x", Obj("z"), NAT) == r


def test_erase_label():
    r = R("((Has-Prop p) (in x (Has-Prop p)) (not-in x (Has-Prop p)) _)")
    # (in x Top) and (not-in x (U)) both hold trivially
    assert pretty(erase_label(r, "p")) == "(Top (in x Top) (not-in x (U)) _)"


# ------------------------------------------------------------ rules


def test_small_programs():
    assert checks("(add1 1)") == "(Nat TT FF _)"
    assert checks("1") == "(Nat TT FF _)"
    assert checks("(if (nat? true) 1 2)") == "(Nat TT FF _)"
    assert checks("true") == "(True TT FF _)"
    assert checks("false") == "(False FF TT _)"
    with pytest.raises(FreeVariable):
        check_program(parse_program("x"))


def test_lambda_gets_latent_propositions():
    r = check_program(parse_program("(lambda (v : Top) (nat? v))")).result
    assert pretty(r.type) == "(-> (v : Top) (Bool (in v Nat) (not-in v Nat) _))"


def test_application_uses_the_declared_range():
    r = check_program(parse_program("((lambda (v : Top) v) 1)")).result
    assert pretty(r) == "(Top TT FF _)"  # the argument's object is null, so v's facts are dropped


@pytest.mark.parametrize("name", sorted(n for n, c in CASES.items() if c[0] != "parse-error"))
def test_corpus_expectations(name):
    status, typ, _, loc = CASES[name]
    if status == "ok":
        assert display(pretty(check_program(program(name)).type)) == typ
        return
    with pytest.raises(TypeCheckError) as err:
        check_program(program(name))
    assert err.value.code == status
    assert (err.value.line, err.value.col) == loc


def test_struct_shadowing_is_rejected_at_the_accessor():
    with pytest.raises(TypeMismatch) as err:
        check_program(program("generativity_struct"))
    assert (err.value.line, err.value.col) == (5, 5)  # (foo-a y)
    assert "different declaration" in err.value.message


def test_property_redeclaration_is_rejected_at_the_inner_form():
    with pytest.raises(PropertyRedeclared) as err:
        check_program(program("generativity_property"))
    assert (err.value.line, err.value.col) == (3, 11)


def test_receiver_swap_pair():
    assert display(pretty(check_program(program("worked_example")).type)) == "Nat"
    with pytest.raises(TypeMismatch):
        check_program(program("receiver_swap"))


def test_label_reuse_is_what_keeps_extraction_sound():
    """Without the freshness condition the redeclaration listing checks and
    then goes wrong at run time."""
    out = check_program(program("generativity_property"), Session(allow_label_reuse=True))
    assert out.type == NAT
    assert evaluate({}, out.program).error.kind == "apply-non-function"


def test_struct_declarations_get_distinct_stamps():
    prog = parse_program("(let-struct ((a a? a-v) (s Nat ())) (let-struct ((b b? b-v) (s Nat ())) 1))")
    prepared = check_program(prog).program
    stamps = [n.stamp for n in walk(prepared) if isinstance(n, LetStruct)]
    assert len(set(stamps)) == 2


def test_well_typed_corpus_is_large_enough():
    assert len(WELL_TYPED) >= 30


def test_has_prop_argument_accepts_struct():
    src = """(let-struct-property ((d p? p-acc) (lbl Nat))
               (let-struct ((mk s? s-v) (s Nat ((d 1))))
                 ((lambda (v : (Has-Prop lbl)) 0) (mk 2))))"""
    assert checks(src) == "(Nat TT FF _)"


def test_struct_type_escaping_scope_is_still_printable():
    out = check_program(parse_program("(let-struct ((mk s? s-v) (s Nat ())) (mk 1))"))
    assert isinstance(out.type, StructT) and display(pretty(out.type)) == "s"


def test_has_prop_type_is_erased_when_label_leaves_scope():
    src = "(let-struct-property ((d p? p-acc) (lbl Nat)) (lambda (v : (Has-Prop lbl)) 0))"
    out = check_program(parse_program(src))
    assert HasPropT("lbl") not in list(_types(out.type))


def _types(t):
    yield t
    for f in getattr(t, "__dataclass_fields__", {}):
        v = getattr(t, f)
        if isinstance(v, tuple):
            for x in v:
                yield from _types(x)
        elif hasattr(v, "__dataclass_fields__"):
            yield from _types(v)
