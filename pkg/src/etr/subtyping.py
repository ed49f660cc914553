"""Subtyping on types, objects and type results."""

from __future__ import annotations

from typing import Optional

from .syntax import (
    ArrowT,
    HasPropT,
    IsType,
    NullObj,
    Obj,
    PairT,
    PropT,
    StructT,
    TVar,
    Top,
    Type,
    TypeResult,
    UnionT,
    _canon,
    alpha_equal,
    flatten_union,
    subst_obj_result,
    subst_tvars,
    subst_tvars_result,
)


def subtype(env, sub: Type, sup: Type) -> bool:
    if sub is sup or sub == sup:
        return True
    sub, sup = flatten_union(sub), flatten_union(sup)
    if isinstance(sup, Top):
        return True
    if isinstance(sub, UnionT):
        return all(subtype(env, m, sup) for m in sub.members)
    if isinstance(sup, UnionT):
        return any(subtype(env, sub, m) for m in sup.members)
    match sub, sup:
        case PairT(a1, b1), PairT(a2, b2):
            return subtype(env, a1, a2) and subtype(env, b1, b2)
        case StructT(n1, f1, p1, s1), StructT(n2, f2, p2, s2):
            # same declaration; the larger side may have forgotten labels
            # that went out of scope
            return s1 == s2 and alpha_equal(f1, f2) and set(p2) <= set(p1)
        case StructT(props=ps), HasPropT(label):
            return label in ps and env is not None and label in env.properties
        case PropT(v1), PropT(v2):
            return alpha_equal(v1, v2)
        case ArrowT(), ArrowT():
            return _sub_arrow(env, sub, sup)
    return alpha_equal(sub, sup)


def _sub_arrow(env, a: ArrowT, b: ArrowT) -> bool:
    if len(b.quants) > len(a.quants):
        return False
    # pair quantifiers positionally onto shared rigid names; extra
    # quantifiers on the smaller side stay rigid
    ma, mb = {}, {}
    for i, q in enumerate(a.quants):
        c = _canon()
        ma[q] = TVar(c)
        if i < len(b.quants):
            mb[b.quants[i]] = TVar(c)
    da, db = subst_tvars(a.dom, ma), subst_tvars(b.dom, mb)
    ra, rb = subst_tvars_result(a.res, ma), subst_tvars_result(b.res, mb)
    if not subtype(env, db, da):
        return False
    z = _canon()
    ra = subst_obj_result(ra, a.param, Obj(z))
    rb = subst_obj_result(rb, b.param, Obj(z))
    inner = env.extend(IsType(Obj(z), db)) if env is not None else _empty().extend(IsType(Obj(z), db))
    return subresult(inner, ra, rb)


def _empty():
    from .logic import TypeEnv
    return TypeEnv()


def subobject(a, b) -> bool:
    return isinstance(b, NullObj) or a == b


def subresult(env, a: TypeResult, b: TypeResult) -> bool:
    from .logic import proves
    if env is None:
        env = _empty()
    return (
        subtype(env, a.type, b.type)
        and subobject(a.obj, b.obj)
        and proves(env.extend(a.pos), b.pos)
        and proves(env.extend(a.neg), b.neg)
    )
