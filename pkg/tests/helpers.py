"""Shared fixtures: text shorthands, random types, and the corpus table."""

from __future__ import annotations

import random
from pathlib import Path

from etr.sexpr import parse_obj, parse_program, parse_prop, parse_type_text, read_all
from etr.syntax import (
    BOTTOM,
    FALSE_T,
    NAT,
    TOP,
    TRUE_T,
    ArrowT,
    HasPropT,
    PairT,
    StructT,
    TVar,
    TypeResult,
    UnionT,
)

CORPUS = Path(__file__).parent / "corpus"


def T(text: str):
    return parse_type_text(text)


def P(text: str):
    return parse_prop(read_all(text)[0])


def O(text: str):
    return parse_obj(read_all(text)[0])


def program(name: str):
    return parse_program((CORPUS / f"{name}.etr").read_text())


POINT = StructT("point", NAT, ("pnorm",), 1)
BARE = StructT("bare", NAT, (), 2)


def random_type(rng: random.Random, depth: int = 3):
    """Types over every constructor the checker handles, arrows included."""
    leaves = [TOP, NAT, TRUE_T, FALSE_T, BOTTOM, HasPropT("pnorm"), TVar("X"), POINT, BARE]
    if depth <= 0 or rng.random() < 0.3:
        return rng.choice(leaves)
    match rng.randrange(3):
        case 0:
            return PairT(random_type(rng, depth - 1), random_type(rng, depth - 1))
        case 1:
            return UnionT(tuple(random_type(rng, depth - 1) for _ in range(rng.randrange(1, 4))))
        case _:
            return ArrowT((), "x", random_type(rng, depth - 1), TypeResult(random_type(rng, depth - 1)))


# name -> (status, type, value-or-stuck-kind, location)
# status is "ok", a type-error code, or "parse-error".  For rejected
# programs the third column is what unchecked evaluation produces.
CASES = {
    "bool_predicate": ("ok", "Bool", "false", None),
    "curried": ("ok", "Nat", "4", None),
    "dead_branch": ("ok", "Nat", "3", None),
    "generativity_property": ("property-redeclared", None, "apply-non-function", (3, 11)),
    "generativity_struct": ("type-mismatch", None, "missing-property", (5, 5)),
    "higher_order": ("ok", "Nat", "3", None),
    "if_simple": ("ok", "Nat", "1", None),
    "ill_accessor_wrong_struct": ("type-mismatch", None, "missing-property", (4, 5)),
    "ill_add1_bool": ("type-mismatch", None, "delta-domain", (2, 1)),
    "ill_existential_escape": ("type-mismatch", None, "2", (5, 11)),
    "ill_not_function": ("not-a-function", None, "apply-non-function", (2, 1)),
    "ill_occurrence_wrong_branch": ("type-mismatch", None, "0", (2, 44)),
    "ill_projection": ("non-pair-projection", None, "projection-non-pair", (2, 1)),
    "ill_self_outside": ("self-outside-property", None, "1", (2, 2)),
    "ill_truthy_projection": ("type-mismatch", None, "2", (2, 53)),
    "ill_two_extractions": ("type-mismatch", None, "#<ctr 0>", (5, 36)),
    "ill_unbound": ("free-variable", None, "unbound-variable", (2, 7)),
    "lambda_identity": ("ok", "Nat", "7", None),
    "latent_predicate": ("ok", "Nat", "2", None),
    "let_basic": ("ok", "Nat", "5", None),
    "let_shadow": ("ok", "Nat", "4", None),
    "lit_bool": ("ok", "(Pair True False)", "(cons true false)", None),
    "lit_nat": ("ok", "Nat", "42", None),
    "method_bool": ("ok", "Bool", "true", None),
    "method_let_bound": ("ok", "Nat", "5", None),
    "method_self": ("ok", "X", "#<ctr 0>", None),
    "nested_if_join": ("ok", "(U Nat False)", "1", None),
    "occurrence_else": ("ok", "(U Nat True False)", "true", None),
    "occurrence_let": ("ok", "Nat", "1", None),
    "occurrence_nat": ("ok", "Nat", "6", None),
    "pair_fst": ("ok", "Nat", "1", None),
    "pair_nested_path": ("ok", "Nat", "3", None),
    "pair_path": ("ok", "Nat", "4", None),
    "pair_predicate": ("ok", "Top", "8", None),
    "pair_snd": ("ok", "(Pair Nat Nat)", "(cons 2 3)", None),
    "parse_error": ("parse-error", None, None, (2, 1)),
    "prim_add1": ("ok", "Nat", "2", None),
    "prim_not": ("ok", "Bool", "false", None),
    "property_constant": ("ok", "Nat", "9", None),
    "property_predicate": ("ok", "Nat", "9", None),
    "receiver_swap": ("type-mismatch", None, "missing-property", (8, 41)),
    "struct_basic": ("ok", "Nat", "5", None),
    "struct_pair_field": ("ok", "Nat", "2", None),
    "struct_predicate": ("ok", "Nat", "6", None),
    "truthiness": ("ok", "Nat", "3", None),
    "two_structs_one_property": ("ok", "(Pair Nat Nat)", "(cons 2 1)", None),
    "worked_example": ("ok", "Nat", "3", None),
}

WELL_TYPED = sorted(n for n, c in CASES.items() if c[0] == "ok")
PARSEABLE = sorted(n for n, c in CASES.items() if c[0] != "parse-error")
