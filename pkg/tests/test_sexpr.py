import random

import pytest
from hypothesis import given, settings, strategies as st

from etr.generator import generate_program
from etr.sexpr import ArityError, ParseError, parse_program, parse_type_text, pretty
from etr.syntax import (
    BOTTOM,
    NAT,
    TOP,
    App,
    LetProp,
    LetStruct,
    NameSupply,
    NatLit,
    Prim,
    Var,
    Lam,
    alpha_equal,
    arrow,
    result,
    TVar,
    UnionT,
    TRUE_T,
)

from helpers import CASES, CORPUS, PARSEABLE, T, random_type


def strip(e):
    """Parse trees carry locations; compare them through the printer."""
    return pretty(e)


def test_parse_simple_forms():
    e = parse_program("(add1 1)")
    assert isinstance(e, App) and e.fn == Prim("add1") and e.arg == NatLit(1)
    lam = parse_program("(lambda (x : Nat) x)")
    assert isinstance(lam, Lam) and lam.param == "x" and lam.annot == NAT and lam.body == Var("x")


def test_worked_example_shape():
    e = parse_program((CORPUS / "worked_example.etr").read_text())
    assert isinstance(e, LetProp)
    assert isinstance(e.body, LetStruct)
    assert isinstance(e.body.body, App)


def test_print_examples():
    assert pretty(NatLit(1)) == "1"
    assert pretty(BOTTOM) == "(U)"
    ex = arrow("x", TOP, result(TVar("X")), ("X",))
    assert pretty(ex) == "(Exists (X) (-> (x : Top) X))"


def test_parse_errors_carry_locations():
    with pytest.raises(ParseError) as err:
        parse_program("(lambda (x : Nat))")
    assert (err.value.line, err.value.col) == (1, 1)
    with pytest.raises(ParseError):
        parse_program("")
    with pytest.raises(ParseError):
        parse_program("1 2")
    with pytest.raises(ArityError):
        parse_type_text("(Exists () (-> (x : Top) Nat))")


def test_name_supply():
    s = NameSupply()
    assert s.fresh("X") == "X%0"
    assert s.fresh("X") == "X%1"
    assert NameSupply().fresh("Self") == "Self%0"


def test_alpha_equal():
    a = arrow("x", TOP, result(TVar("X")), ("X",))
    b = arrow("y", TOP, result(TVar("Y")), ("Y",))
    assert alpha_equal(a, b)
    assert not alpha_equal(NAT, TRUE_T)
    assert not alpha_equal(UnionT((NAT, TRUE_T)), UnionT((TRUE_T, NAT)))


@pytest.mark.parametrize("name", PARSEABLE)
def test_corpus_round_trip(name):
    e = parse_program((CORPUS / f"{name}.etr").read_text())
    assert strip(parse_program(pretty(e))) == pretty(e)


def test_generated_round_trip():
    for seed in range(1000):
        e = generate_program(seed, 1 + seed % 30)
        assert pretty(parse_program(pretty(e))) == pretty(e)


def test_random_types_round_trip():
    rng = random.Random(7)
    for _ in range(500):
        t = random_type(rng)
        if "point" in pretty(t) or "bare" in pretty(t):
            continue  # struct names resolve only inside a program
        assert parse_type_text(pretty(t)) == t


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="()[] \n;:->UNatTopxyz0123456789lambdaifletconsfstsnd?", max_size=60))
def test_parser_is_total(text):
    """Arbitrary text either parses or raises ParseError, nothing else."""
    try:
        e = parse_program(text)
    except ParseError:
        return
    assert pretty(parse_program(pretty(e))) == pretty(e)


def test_every_case_has_a_file():
    assert {p.stem for p in CORPUS.glob("*.etr")} == set(CASES)
