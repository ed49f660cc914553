"""Abstract syntax: expressions, types, propositions, objects, values.

Everything here is immutable.  Source locations ride along on expression
nodes but never take part in equality.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

PRIMS = ("not", "add1", "nat?", "bool?", "pair?")
FIELDS = ("fst", "snd")

Loc = Optional[tuple[int, int]]


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Nat:
    pass


@dataclass(frozen=True)
class TrueT:
    pass


@dataclass(frozen=True)
class FalseT:
    pass


@dataclass(frozen=True)
class PairT:
    fst: "Type"
    snd: "Type"


@dataclass(frozen=True)
class UnionT:
    members: tuple["Type", ...]


@dataclass(frozen=True)
class StructT:
    """Nominal struct type.  ``stamp`` identifies the declaring occurrence;
    ``name`` is for display only."""

    name: str
    field: "Type"
    props: tuple[str, ...]
    stamp: int = 0


@dataclass(frozen=True)
class PropT:
    value: "Type"


@dataclass(frozen=True)
class HasPropT:
    label: str


@dataclass(frozen=True)
class SelfT:
    pass


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class ArrowT:
    """``Exists quants. param:dom -> res``; no quantifiers is the plain arrow."""

    quants: tuple[str, ...]
    param: str
    dom: "Type"
    res: "TypeResult"


Type = Union[Top, Nat, TrueT, FalseT, PairT, UnionT, StructT, PropT, HasPropT, SelfT, TVar, ArrowT]

TOP = Top()
NAT = Nat()
TRUE_T = TrueT()
FALSE_T = FalseT()
BOOL = UnionT((TRUE_T, FALSE_T))
BOTTOM = UnionT(())
SELF = SelfT()


# ------------------------------------------------------------- objects


@dataclass(frozen=True)
class NullObj:
    pass


@dataclass(frozen=True)
class Obj:
    """A variable, or a projection path over one.  ``path`` is written
    outermost first, so ``(fst (snd x))`` is ``Obj("x", ("fst", "snd"))``."""

    var: str
    path: tuple[str, ...] = ()


SymObj = Union[NullObj, Obj]
NULL = NullObj()


# --------------------------------------------------------- propositions


@dataclass(frozen=True)
class TT:
    pass


@dataclass(frozen=True)
class FF:
    pass


@dataclass(frozen=True)
class IsType:
    obj: Obj
    type: Type


@dataclass(frozen=True)
class NotType:
    obj: Obj
    type: Type


@dataclass(frozen=True)
class And:
    left: "Prop"
    right: "Prop"


@dataclass(frozen=True)
class Or:
    left: "Prop"
    right: "Prop"


@dataclass(frozen=True)
class Alias:
    left: Obj
    right: Obj


Prop = Union[TT, FF, IsType, NotType, And, Or, Alias]
TRUE_P = TT()
FALSE_P = FF()


@dataclass(frozen=True)
class TypeResult:
    type: Type
    pos: Prop = TRUE_P
    neg: Prop = TRUE_P
    obj: SymObj = NULL


def result(t: Type, pos: Prop = TRUE_P, neg: Prop = TRUE_P, obj: SymObj = NULL) -> TypeResult:
    return TypeResult(t, pos, neg, obj)


def mk_and(a: Prop, b: Prop) -> Prop:
    if isinstance(a, FF) or isinstance(b, FF):
        return FALSE_P
    if isinstance(a, TT):
        return b
    if isinstance(b, TT) or a == b:
        return a
    return And(a, b)


def mk_or(a: Prop, b: Prop) -> Prop:
    if isinstance(a, TT) or isinstance(b, TT):
        return TRUE_P
    if isinstance(a, FF):
        return b
    if isinstance(b, FF) or a == b:
        return a
    return Or(a, b)


# ---------------------------------------------------------- expressions


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class StructRef:
    name: str
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class PropRef:
    label: str
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class NatLit:
    value: int
    loc: Loc = field(default=None, compare=False)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("natural literals are non-negative")


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Prim:
    op: str
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Lam:
    param: str
    annot: Type
    body: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class App:
    fn: "Expr"
    arg: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    test: "Expr"
    then: "Expr"
    els: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Let:
    name: str
    rhs: "Expr"
    body: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class LetStruct:
    ctor: str
    pred: str
    acc: str
    struct: str
    field_type: Type
    props: tuple[tuple[str, "Expr"], ...]
    body: "Expr"
    loc: Loc = field(default=None, compare=False)
    # filled in by typecheck.prepare
    stamp: Optional[int] = field(default=None, compare=False)
    labels: Optional[tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        names = [p for p, _ in self.props]
        if len(set(names)) != len(names):
            raise ValueError("duplicate property binding in let-struct")


@dataclass(frozen=True)
class LetProp:
    desc: str
    pred: str
    acc: str
    label: str
    value_type: Type
    body: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Cons:
    fst: "Expr"
    snd: "Expr"
    loc: Loc = field(default=None, compare=False)


@dataclass(frozen=True)
class Proj:
    which: str  # "fst" | "snd"
    target: "Expr"
    loc: Loc = field(default=None, compare=False)


Expr = Union[Var, StructRef, PropRef, NatLit, BoolLit, Prim, Lam, App, If, Let, LetStruct, LetProp, Cons, Proj]


def children(e: Expr) -> list[Expr]:
    match e:
        case Lam(body=b):
            return [b]
        case App(f, a):
            return [f, a]
        case If(t, a, b):
            return [t, a, b]
        case Let(_, r, b):
            return [r, b]
        case LetStruct(props=ps, body=b):
            return [pe for _, pe in ps] + [b]
        case LetProp(body=b):
            return [b]
        case Cons(a, b):
            return [a, b]
        case Proj(_, t):
            return [t]
    return []


def walk(e: Expr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def free_vars(e: Expr) -> set[str]:
    match e:
        case Var(name):
            return {name}
        case Lam(x, _, b):
            return free_vars(b) - {x}
        case Let(x, r, b):
            return free_vars(r) | (free_vars(b) - {x})
        case LetStruct(c, p, a, _, _, ps, b):
            out = free_vars(b) - {c, p, a}
            for d, pe in ps:
                out |= {d} | (free_vars(pe) - {p, a})
            return out
        case LetProp(d, p, a, _, _, b):
            return free_vars(b) - {d, p, a}
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


# --------------------------------------------------------------- values


@dataclass(frozen=True)
class NatV:
    n: int


@dataclass(frozen=True)
class TrueV:
    pass


@dataclass(frozen=True)
class FalseV:
    pass


@dataclass(frozen=True)
class PrimV:
    op: str


@dataclass(frozen=True)
class PairV:
    fst: "Value"
    snd: "Value"


@dataclass(frozen=True, eq=False)
class ClosureV:
    env: Mapping[str, "Value"]
    param: str
    annot: Type
    body: Expr


@dataclass(frozen=True)
class StructV:
    name: str
    stamp: int
    field: "Value"
    field_type: Type
    props: tuple[tuple[str, "Value"], ...]

    def prop(self, label: str):
        for k, v in self.props:
            if k == label:
                return v
        return None

    @property
    def struct_type(self) -> StructT:
        return StructT(self.name, self.field_type, tuple(k for k, _ in self.props), self.stamp)


@dataclass(frozen=True)
class DescV:
    label: str
    value_type: Type


@dataclass(frozen=True)
class CtorV:
    stype: StructT
    prop_values: tuple[tuple[str, "Value"], ...]


@dataclass(frozen=True)
class PredV:
    stype: StructT


@dataclass(frozen=True)
class AccV:
    stype: StructT


@dataclass(frozen=True)
class PPredV:
    label: str


@dataclass(frozen=True)
class PAccV:
    label: str
    value_type: Type


StructOpV = Union[CtorV, PredV, AccV, PPredV, PAccV]
Value = Union[NatV, TrueV, FalseV, PrimV, PairV, ClosureV, StructV, DescV, CtorV, PredV, AccV, PPredV, PAccV]
TRUE_V = TrueV()
FALSE_V = FalseV()

RuntimeEnv = Mapping[str, Value]


# ----------------------------------------------------------- name supply


class NameSupply:
    """Issues names outside the surface namespace (they contain ``%``)."""

    def __init__(self, tag: str = ""):
        self._counters: defaultdict[str, itertools.count] = defaultdict(itertools.count)
        self.issued: list[str] = []
        self.tag = tag

    def fresh(self, hint: str) -> str:
        base = hint.split("%", 1)[0] or "X"
        name = f"{base}%{self.tag}{next(self._counters[base])}"
        self.issued.append(name)
        return name


def fresh_type_var(session: NameSupply, hint: str) -> str:
    return session.fresh(hint)


_alpha_counter = itertools.count()


def _canon() -> str:
    return f"%a{next(_alpha_counter)}"


# ------------------------------------------------------ type utilities


def type_free_tvars(t: Type) -> set[str]:
    match t:
        case TVar(n):
            return {n}
        case PairT(a, b):
            return type_free_tvars(a) | type_free_tvars(b)
        case UnionT(ms):
            out: set[str] = set()
            for m in ms:
                out |= type_free_tvars(m)
            return out
        case StructT(_, f, _, _):
            return type_free_tvars(f)
        case PropT(v):
            return type_free_tvars(v)
        case ArrowT(qs, _, d, r):
            return (type_free_tvars(d) | result_free_tvars(r)) - set(qs)
    return set()


def result_free_tvars(r: TypeResult) -> set[str]:
    return type_free_tvars(r.type) | prop_free_tvars(r.pos) | prop_free_tvars(r.neg)


def prop_free_tvars(p: Prop) -> set[str]:
    match p:
        case IsType(_, t) | NotType(_, t):
            return type_free_tvars(t)
        case And(a, b) | Or(a, b):
            return prop_free_tvars(a) | prop_free_tvars(b)
    return set()


def arrow(param: str, dom: Type, res: TypeResult, quants: tuple[str, ...] = ()) -> ArrowT:
    """Build an arrow, dropping quantifiers its body never mentions."""
    if quants:
        used = type_free_tvars(dom) | result_free_tvars(res)
        quants = tuple(q for q in quants if q in used)
    return ArrowT(quants, param, dom, res)


def subst_tvars(t: Type, m: Mapping[str, Type]) -> Type:
    """Capture-avoiding replacement of type variables (``Self`` excluded)."""
    if not m:
        return t
    match t:
        case TVar(n):
            return m.get(n, t)
        case PairT(a, b):
            return PairT(subst_tvars(a, m), subst_tvars(b, m))
        case UnionT(ms):
            return UnionT(tuple(subst_tvars(x, m) for x in ms))
        case StructT(n, f, ps, s):
            return StructT(n, subst_tvars(f, m), ps, s)
        case PropT(v):
            return PropT(subst_tvars(v, m))
        case ArrowT(qs, x, d, r):
            inner = {k: v for k, v in m.items() if k not in qs}
            if not inner:
                return t
            clash = set(qs) & set().union(*(type_free_tvars(v) for v in inner.values()))
            if clash:
                ren = {q: _canon() if q in clash else q for q in qs}
                inner = {**inner, **{q: TVar(ren[q]) for q in clash}}
                qs = tuple(ren[q] for q in qs)
            return ArrowT(qs, x, subst_tvars(d, inner), subst_tvars_result(r, inner))
    return t


def subst_tvars_result(r: TypeResult, m: Mapping[str, Type]) -> TypeResult:
    return TypeResult(subst_tvars(r.type, m), subst_tvars_prop(r.pos, m), subst_tvars_prop(r.neg, m), r.obj)


def subst_tvars_prop(p: Prop, m: Mapping[str, Type]) -> Prop:
    match p:
        case IsType(o, t):
            return IsType(o, subst_tvars(t, m))
        case NotType(o, t):
            return NotType(o, subst_tvars(t, m))
        case And(a, b):
            return And(subst_tvars_prop(a, m), subst_tvars_prop(b, m))
        case Or(a, b):
            return Or(subst_tvars_prop(a, m), subst_tvars_prop(b, m))
    return p


def replace_self(t: Type, by: Type) -> Type:
    match t:
        case SelfT():
            return by
        case PairT(a, b):
            return PairT(replace_self(a, by), replace_self(b, by))
        case UnionT(ms):
            return UnionT(tuple(replace_self(x, by) for x in ms))
        case StructT(n, f, ps, s):
            return StructT(n, replace_self(f, by), ps, s)
        case PropT(_):
            return t  # a nested Prop owns its own Self
        case ArrowT(qs, x, d, r):
            return ArrowT(qs, x, replace_self(d, by), _map_result_types(r, lambda u: replace_self(u, by)))
    return t


def _map_result_types(r: TypeResult, f) -> TypeResult:
    return TypeResult(f(r.type), _map_prop_types(r.pos, f), _map_prop_types(r.neg, f), r.obj)


def _map_prop_types(p: Prop, f) -> Prop:
    match p:
        case IsType(o, t):
            return IsType(o, f(t))
        case NotType(o, t):
            return NotType(o, f(t))
        case And(a, b):
            return And(_map_prop_types(a, f), _map_prop_types(b, f))
        case Or(a, b):
            return Or(_map_prop_types(a, f), _map_prop_types(b, f))
    return p


def mentions_self(t: Type) -> bool:
    match t:
        case SelfT():
            return True
        case PairT(a, b):
            return mentions_self(a) or mentions_self(b)
        case UnionT(ms):
            return any(mentions_self(m) for m in ms)
        case StructT(_, f, _, _):
            return mentions_self(f)
        case PropT(_):
            return False
        case ArrowT(_, _, d, r):
            found = []
            _map_result_types(r, lambda u: found.append(mentions_self(u)) or u)
            return mentions_self(d) or any(found)
    return False


def flatten_union(t: Type) -> Type:
    """Flatten nested unions, drop bottoms and duplicates; a singleton union
    becomes its member.  Member order is preserved."""
    if not isinstance(t, UnionT):
        return t
    out: list[Type] = []
    for m in t.members:
        m = flatten_union(m)
        for x in m.members if isinstance(m, UnionT) else (m,):
            if x not in out:
                out.append(x)
    if any(isinstance(x, Top) for x in out):
        return TOP
    if len(out) == 1:
        return out[0]
    return UnionT(tuple(out))


def union_of(*ts: Type) -> Type:
    return flatten_union(UnionT(tuple(ts)))


def is_bottom(t: Type) -> bool:
    return isinstance(t, UnionT) and all(is_bottom(m) for m in t.members)


# -------------------------------------------------------- alpha equality


def alpha_equal(a: Type, b: Type) -> bool:
    """Syntactic equality up to renaming of bound quantifiers and bound
    parameter names.  Union member order matters."""
    return _aeq_type_v(a, b, {}, {}, {}, {})


def _aeq_type(a, b, qa, qb) -> bool:
    if isinstance(a, TVar) and isinstance(b, TVar):
        return qa.get(a.name, a.name) == qb.get(b.name, b.name)
    return a == b


def _aeq_result(r1, r2, qa, qb, va, vb) -> bool:
    return (
        _aeq_type_v(r1.type, r2.type, qa, qb, va, vb)
        and _aeq_prop(r1.pos, r2.pos, qa, qb, va, vb)
        and _aeq_prop(r1.neg, r2.neg, qa, qb, va, vb)
        and _aeq_obj(r1.obj, r2.obj, va, vb)
    )


def _aeq_type_v(a, b, qa, qb, va, vb) -> bool:
    # term-variable renamings only matter inside arrow results
    if isinstance(a, ArrowT) and isinstance(b, ArrowT):
        if len(a.quants) != len(b.quants) or not _aeq_type_v(a.dom, b.dom, qa, qb, va, vb):
            return False
        qa2, qb2 = dict(qa), dict(qb)
        for u, v in zip(a.quants, b.quants):
            c = _canon()
            qa2[u], qb2[v] = c, c
        c = _canon()
        return _aeq_result(a.res, b.res, qa2, qb2, {**va, a.param: c}, {**vb, b.param: c})
    match a, b:
        case PairT(a1, a2), PairT(b1, b2):
            return _aeq_type_v(a1, b1, qa, qb, va, vb) and _aeq_type_v(a2, b2, qa, qb, va, vb)
        case UnionT(ms), UnionT(ns):
            return len(ms) == len(ns) and all(_aeq_type_v(m, n, qa, qb, va, vb) for m, n in zip(ms, ns))
        case StructT(n1, f1, p1, s1), StructT(n2, f2, p2, s2):
            return s1 == s2 and n1 == n2 and p1 == p2 and _aeq_type_v(f1, f2, qa, qb, va, vb)
        case PropT(v1), PropT(v2):
            return _aeq_type_v(v1, v2, qa, qb, va, vb)
    return _aeq_type(a, b, qa, qb)


def _aeq_obj(o1, o2, va, vb) -> bool:
    match o1, o2:
        case Obj(x, p), Obj(y, q):
            return p == q and va.get(x, x) == vb.get(y, y)
    return o1 == o2


def _aeq_prop(p1, p2, qa, qb, va, vb) -> bool:
    match p1, p2:
        case IsType(o1, t1), IsType(o2, t2):
            return _aeq_obj(o1, o2, va, vb) and _aeq_type_v(t1, t2, qa, qb, va, vb)
        case NotType(o1, t1), NotType(o2, t2):
            return _aeq_obj(o1, o2, va, vb) and _aeq_type_v(t1, t2, qa, qb, va, vb)
        case And(a1, b1), And(a2, b2):
            return _aeq_prop(a1, a2, qa, qb, va, vb) and _aeq_prop(b1, b2, qa, qb, va, vb)
        case Or(a1, b1), Or(a2, b2):
            return _aeq_prop(a1, a2, qa, qb, va, vb) and _aeq_prop(b1, b2, qa, qb, va, vb)
        case Alias(a1, b1), Alias(a2, b2):
            return _aeq_obj(a1, a2, va, vb) and _aeq_obj(b1, b2, va, vb)
    return p1 == p2


def alpha_equal_result(a: TypeResult, b: TypeResult) -> bool:
    return _aeq_result(a, b, {}, {}, {}, {})


# ------------------------------------------------ object substitution


def obj_vars_type(t: Type) -> set[str]:
    """Term variables mentioned free by objects inside a type."""
    match t:
        case PairT(a, b):
            return obj_vars_type(a) | obj_vars_type(b)
        case UnionT(ms):
            return set().union(*(obj_vars_type(m) for m in ms))
        case StructT(_, f, _, _):
            return obj_vars_type(f)
        case PropT(v):
            return obj_vars_type(v)
        case ArrowT(_, x, d, r):
            return obj_vars_type(d) | (obj_vars_result(r) - {x})
    return set()


def obj_vars_result(r: TypeResult) -> set[str]:
    out = obj_vars_type(r.type) | obj_vars_prop(r.pos) | obj_vars_prop(r.neg)
    if isinstance(r.obj, Obj):
        out.add(r.obj.var)
    return out


def obj_vars_prop(p: Prop) -> set[str]:
    match p:
        case IsType(o, t) | NotType(o, t):
            return {o.var} | obj_vars_type(t)
        case And(a, b) | Or(a, b):
            return obj_vars_prop(a) | obj_vars_prop(b)
        case Alias(a, b):
            return {a.var, b.var}
    return set()


def subst_obj(o: SymObj, x: str, new: Obj) -> SymObj:
    if isinstance(o, Obj) and o.var == x:
        return Obj(new.var, o.path + new.path)
    return o


def subst_obj_type(t: Type, x: str, new: Obj) -> Type:
    match t:
        case PairT(a, b):
            return PairT(subst_obj_type(a, x, new), subst_obj_type(b, x, new))
        case UnionT(ms):
            return UnionT(tuple(subst_obj_type(m, x, new) for m in ms))
        case StructT(n, f, ps, s):
            return StructT(n, subst_obj_type(f, x, new), ps, s)
        case PropT(v):
            return PropT(subst_obj_type(v, x, new))
        case ArrowT(qs, p, d, r):
            d = subst_obj_type(d, x, new)
            if p == x:
                return ArrowT(qs, p, d, r)
            if p == new.var:
                q = _canon()
                r = subst_obj_result(r, p, Obj(q))
                p = q
            return ArrowT(qs, p, d, subst_obj_result(r, x, new))
    return t


def subst_obj_result(r: TypeResult, x: str, new: Obj) -> TypeResult:
    return TypeResult(
        subst_obj_type(r.type, x, new),
        subst_obj_prop(r.pos, x, new),
        subst_obj_prop(r.neg, x, new),
        subst_obj(r.obj, x, new),
    )


def subst_obj_prop(p: Prop, x: str, new: Obj) -> Prop:
    match p:
        case IsType(o, t):
            return IsType(subst_obj(o, x, new), subst_obj_type(t, x, new))
        case NotType(o, t):
            return NotType(subst_obj(o, x, new), subst_obj_type(t, x, new))
        case And(a, b):
            return And(subst_obj_prop(a, x, new), subst_obj_prop(b, x, new))
        case Or(a, b):
            return Or(subst_obj_prop(a, x, new), subst_obj_prop(b, x, new))
        case Alias(a, b):
            return Alias(subst_obj(a, x, new), subst_obj(b, x, new))
    return p
