import random

import pytest
from hypothesis import given, settings, strategies as st

from etr.logic import TypeEnv
from etr.subtyping import subobject, subresult, subtype
from etr.syntax import (
    BOOL,
    BOTTOM,
    FALSE_P,
    FALSE_T,
    NAT,
    NULL,
    TOP,
    TRUE_P,
    TRUE_T,
    HasPropT,
    IsType,
    Obj,
    TVar,
    TypeResult,
    UnionT,
    arrow,
    result,
)

from helpers import BARE, POINT, T, random_type

ENV = TypeEnv().declare("pnorm", T("(-> (x : Self) Nat)"))


def test_reflexive_examples():
    assert subtype(ENV, NAT, NAT)
    assert subtype(ENV, POINT, POINT)


def test_reflexive_on_random_types():
    rng = random.Random(0)
    for _ in range(1000):
        t = random_type(rng)
        assert subtype(ENV, t, t), t


def test_struct_below_its_properties():
    assert subtype(ENV, POINT, HasPropT("pnorm"))
    assert not subtype(ENV, BARE, HasPropT("pnorm"))
    assert not subtype(ENV, HasPropT("pnorm"), POINT)


def test_struct_identity_is_by_stamp():
    twin = POINT.__class__("point", NAT, ("pnorm",), 99)
    assert not subtype(ENV, twin, POINT)


# domain types ordered so that each is below the next
CHAIN = [BOTTOM, TRUE_T, BOOL, UnionT((NAT, TRUE_T, FALSE_T)), TOP]


@pytest.mark.parametrize("i", range(len(CHAIN)))
@pytest.mark.parametrize("j", range(len(CHAIN)))
def test_arrow_domains_are_contravariant(i, j):
    f = arrow("x", CHAIN[i], result(NAT))
    g = arrow("x", CHAIN[j], result(NAT))
    assert subtype(ENV, f, g) == (j <= i)


def test_arrow_ranges_are_covariant():
    f = arrow("x", TOP, result(NAT))
    g = arrow("x", TOP, result(TOP))
    assert subtype(ENV, f, g) and not subtype(ENV, g, f)
    assert subtype(ENV, arrow("x", TOP, result(NAT)), arrow("x", NAT, result(NAT)))
    assert not subtype(ENV, arrow("x", NAT, result(NAT)), arrow("x", TOP, result(NAT)))


def test_arrow_latent_propositions():
    strong = arrow("x", TOP, result(BOOL, IsType(Obj("x"), NAT), FALSE_P))
    weak = arrow("y", TOP, result(BOOL, TRUE_P, TRUE_P))
    assert subtype(ENV, strong, weak)
    assert not subtype(ENV, weak, strong)


def test_existential_arrows_compare_up_to_renaming():
    a = arrow("x", TOP, result(TVar("X")), ("X",))
    b = arrow("y", TOP, result(TVar("Y")), ("Y",))
    assert subtype(ENV, a, b)
    assert not subtype(ENV, a, arrow("y", TOP, result(NAT)))


def test_type_variables_are_opaque():
    assert subtype(ENV, TVar("X"), TOP)
    assert not subtype(ENV, TVar("X"), TVar("Y"))
    assert not subtype(ENV, NAT, TVar("X"))


TYPES = st.builds(lambda seed: random_type(random.Random(seed), 2), st.integers(0, 10**6))


@settings(max_examples=300, deadline=None)
@given(TYPES, TYPES)
def test_union_laws(a, b):
    ab, ba = UnionT((a, b)), UnionT((b, a))
    assert subtype(ENV, a, ab) and subtype(ENV, b, ab)
    assert subtype(ENV, ab, ba) and subtype(ENV, ba, ab)
    assert subtype(ENV, UnionT((a, a)), a)
    assert subtype(ENV, BOTTOM, a)
    assert subtype(ENV, a, TOP)
    if subtype(ENV, a, b):
        assert subtype(ENV, ab, b)


@settings(max_examples=300, deadline=None)
@given(TYPES, TYPES, TYPES)
def test_transitivity(a, b, c):
    if subtype(ENV, a, b) and subtype(ENV, b, c):
        assert subtype(ENV, a, c)


def test_subobject():
    assert subobject(Obj("x"), NULL)
    assert subobject(Obj("x"), Obj("x"))
    assert not subobject(Obj("x"), Obj("y"))


def test_subresult():
    r = result(NAT, IsType(Obj("x"), NAT), FALSE_P, Obj("x"))
    assert subresult(ENV, r, r)
    assert subresult(ENV, r, result(TOP))
    assert not subresult(ENV, result(TOP), result(NAT))
    assert not subresult(ENV, TypeResult(NAT, TRUE_P, TRUE_P, NULL), r)
    assert subresult(ENV, result(NAT, TRUE_P, FALSE_P), result(NAT, TRUE_P, TRUE_P))
