"""The typing judgment.

Checking runs in two passes.  ``prepare`` resolves names: shadowing binders
are renamed apart, surface type identifiers are resolved to struct types,
every ``let-struct`` gets a stamp and every property binding its label.
``Checker`` then implements the typing rules over the prepared tree.  The
evaluator runs the same prepared tree, so node identities line up with the
checker's records.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from typing import Optional

from .logic import TypeEnv, bound, lookup, overlap, proves
from .subtyping import subtype
from .syntax import (
    BOOL,
    BOTTOM,
    FALSE_P,
    FALSE_T,
    NAT,
    NULL,
    TOP,
    TRUE_P,
    TRUE_T,
    Alias,
    And,
    App,
    ArrowT,
    BoolLit,
    Cons,
    CtorV,
    FF,
    HasPropT,
    If,
    IsType,
    Lam,
    Let,
    LetProp,
    LetStruct,
    NameSupply,
    NatLit,
    NotType,
    NullObj,
    Obj,
    Or,
    PAccV,
    PPredV,
    PairT,
    Prim,
    Proj,
    PropRef,
    PropT,
    PredV,
    AccV,
    SelfT,
    StructRef,
    StructT,
    TT,
    TVar,
    Top,
    TypeResult,
    UnionT,
    Var,
    arrow,
    flatten_union,
    is_bottom,
    mk_and,
    mk_or,
    replace_self,
    result,
    result_free_tvars,
    subst_obj_result,
    subst_tvars,
    subst_tvars_result,
    union_of,
)

SELF_QUANT = "X%self"


# ------------------------------------------------------------------ errors


class TypeCheckError(Exception):
    code = "type-error"

    def __init__(self, message: str, loc=None):
        super().__init__(message)
        self.message = message
        self.loc = loc

    @property
    def line(self):
        return self.loc[0] if self.loc else None

    @property
    def col(self):
        return self.loc[1] if self.loc else None


class TypeMismatch(TypeCheckError):
    code = "type-mismatch"

    def __init__(self, expected, actual, loc=None, what="expression"):
        from .sexpr import pretty
        self.expected, self.actual = expected, actual
        want, got = display(pretty(expected)), display(pretty(actual))
        if want == got:
            got += " (from a different declaration)"
        super().__init__(f"{what}: expected {want}, got {got}", loc)


class UnboundVariable(TypeCheckError):
    code = "unbound-variable"


class FreeVariable(TypeCheckError):
    code = "free-variable"


class NotAFunction(TypeCheckError):
    code = "not-a-function"


class PropertyRedeclared(TypeCheckError):
    code = "property-redeclared"


class SelfOutsideProperty(TypeCheckError):
    code = "self-outside-property"


class NonPairProjection(TypeCheckError):
    code = "non-pair-projection"


class UnboundType(TypeCheckError):
    code = "unbound-type"


class NotAPropertyDescriptor(TypeCheckError):
    code = "not-a-property-descriptor"


def display(text: str) -> str:
    """Strip renaming suffixes so messages show surface names."""
    import re
    return re.sub(r"%(\d+)", "", text)


# ------------------------------------------------------------ primitive types


def _pred_type(t) -> ArrowT:
    x = Obj("x")
    return arrow("x", TOP, result(BOOL, IsType(x, t), NotType(x, t)))


def delta_type(op: str) -> ArrowT:
    match op:
        case "not":
            return _pred_type(FALSE_T)
        case "add1":
            return arrow("x", NAT, result(NAT, TRUE_P, FALSE_P))
        case "nat?":
            return _pred_type(NAT)
        case "bool?":
            return _pred_type(BOOL)
        case "pair?":
            return _pred_type(PairT(TOP, TOP))
    raise ValueError(f"unknown primitive {op}")


def delta_s_type(sov) -> ArrowT:
    match sov:
        case CtorV(st, _):
            return arrow("x", st.field, result(st, TRUE_P, FALSE_P))
        case PredV(st):
            return _pred_type(st)
        case AccV(st):
            return arrow("x", st, result(st.field))
        case PPredV(label):
            return _pred_type(HasPropT(label))
        case PAccV(label, tau):
            x, X = Obj("x"), TVar(SELF_QUANT)
            return arrow("x", HasPropT(label), result(replace_self(tau, X), IsType(x, X), TRUE_P), (SELF_QUANT,))
    raise ValueError(f"not a struct operation: {sov!r}")


# ------------------------------------------------------------- substitution


def _project_type(t, path):
    from .logic import project
    for f in reversed(path):
        t = project(t, f)
    return t


def subst_result(r: TypeResult, param: str, obj, arg_type, env: Optional[TypeEnv] = None) -> TypeResult:
    """R[x ⇒σ o].  A non-null object replaces ``param``; a null one erases
    it, deciding atoms against ``arg_type`` when possible."""
    if isinstance(obj, Obj):
        return subst_obj_result(r, param, obj)
    mentions = lambda o: isinstance(o, Obj) and o.var == param

    def decide(o, t, positive_atom):
        have = _project_type(arg_type, o.path)
        if positive_atom:
            if subtype(env, have, t):
                return TRUE_P
            if not overlap(env, have, t):
                return FALSE_P
        else:
            if not overlap(env, have, t):
                return TRUE_P
            if subtype(env, have, t):
                return FALSE_P
        return None

    return _erase_result(r, mentions, decide, True, env)


def _erase_result(r, mentions, decide, positive, env):
    """Rewrite a result so it no longer mentions objects selected by
    ``mentions``.  ``positive`` is the variance of the result's position."""
    if not positive and (mentions(r.obj) or _prop_mentions(r.pos, mentions) or _prop_mentions(r.neg, mentions)):
        # a contravariant result may only be strengthened
        return TypeResult(BOTTOM, FALSE_P, FALSE_P, NULL)
    return TypeResult(
        _erase_type(r.type, mentions, decide, positive, env),
        _erase_prop(r.pos, mentions, decide, positive, env),
        _erase_prop(r.neg, mentions, decide, positive, env),
        NULL if mentions(r.obj) else r.obj,
    )


def _prop_mentions(p, mentions) -> bool:
    match p:
        case IsType(o, _) | NotType(o, _):
            return mentions(o)
        case And(a, b) | Or(a, b):
            return _prop_mentions(a, mentions) or _prop_mentions(b, mentions)
        case Alias(a, b):
            return mentions(a) or mentions(b)
    return False


def _erase_prop(p, mentions, decide, positive, env):
    match p:
        case IsType(o, t) | NotType(o, t):
            if mentions(o):
                d = decide(o, t, isinstance(p, IsType)) if decide else None
                if d is not None:
                    return d
                return TRUE_P if positive else FALSE_P
            return type(p)(o, _erase_type(t, mentions, decide, positive, env))
        case And(a, b):
            return mk_and(_erase_prop(a, mentions, decide, positive, env), _erase_prop(b, mentions, decide, positive, env))
        case Or(a, b):
            return mk_or(_erase_prop(a, mentions, decide, positive, env), _erase_prop(b, mentions, decide, positive, env))
        case Alias(a, b):
            if mentions(a) or mentions(b):
                return TRUE_P if positive else FALSE_P
    return p


def _erase_type(t, mentions, decide, positive, env):
    match t:
        case PairT(a, b):
            return PairT(_erase_type(a, mentions, decide, positive, env), _erase_type(b, mentions, decide, positive, env))
        case UnionT(ms):
            return UnionT(tuple(_erase_type(m, mentions, decide, positive, env) for m in ms))
        case ArrowT(qs, x, d, r):
            inner = lambda o: mentions(o) and not (isinstance(o, Obj) and o.var == x)
            d2 = _erase_type(d, mentions, None, not positive, env)
            r2 = _erase_result(r, inner, None, positive, env)
            return ArrowT(qs, x, d2, r2)
    return t


def erase_label(r: TypeResult, label: str) -> TypeResult:
    """Forget a property label that is going out of scope."""
    return _erase_label_result(r, label, True)


def _erase_label_result(r, label, positive):
    return TypeResult(
        _erase_label_type(r.type, label, positive),
        _erase_label_prop(r.pos, label, positive),
        _erase_label_prop(r.neg, label, positive),
        r.obj,
    )


def _erase_label_prop(p, label, positive):
    match p:
        case IsType(o, t):
            return IsType(o, _erase_label_type(t, label, positive))
        case NotType(o, t):
            return NotType(o, _erase_label_type(t, label, not positive))
        case And(a, b):
            return mk_and(_erase_label_prop(a, label, positive), _erase_label_prop(b, label, positive))
        case Or(a, b):
            return mk_or(_erase_label_prop(a, label, positive), _erase_label_prop(b, label, positive))
    return p


def _mentions_label(t, label) -> bool:
    match t:
        case HasPropT(l):
            return l == label
        case PairT(a, b):
            return _mentions_label(a, label) or _mentions_label(b, label)
        case UnionT(ms):
            return any(_mentions_label(m, label) for m in ms)
        case PropT(v):
            return _mentions_label(v, label)
        case StructT(_, f, _, _):
            return _mentions_label(f, label)
        case ArrowT(_, _, d, r):
            return _mentions_label(d, label) or _erase_label_result(r, label, True) != r
    return False


def _erase_label_type(t, label, positive):
    match t:
        case HasPropT(l) if l == label:
            return TOP if positive else BOTTOM
        case PairT(a, b):
            return PairT(_erase_label_type(a, label, positive), _erase_label_type(b, label, positive))
        case UnionT(ms):
            return UnionT(tuple(_erase_label_type(m, label, positive) for m in ms))
        case PropT(v) if _mentions_label(v, label):
            return TOP if positive else BOTTOM
        case StructT(_, f, _, _) if _mentions_label(f, label):
            return TOP if positive else BOTTOM
        case ArrowT(qs, x, d, r):
            return ArrowT(qs, x, _erase_label_type(d, label, not positive), _erase_label_result(r, label, positive))
    return t


# ------------------------------------------------------------------ session


@dataclass
class Session:
    """Per-program checking state: name supplies, stamps, struct and
    property tables, and the records the soundness harness consumes."""

    types: NameSupply = field(default_factory=NameSupply)
    terms: NameSupply = field(default_factory=NameSupply)
    stamps: itertools.count = field(default_factory=lambda: itertools.count(1))
    structs: dict = field(default_factory=dict)        # stamp -> StructT
    properties: dict = field(default_factory=dict)     # label -> value type
    instantiations: dict = field(default_factory=dict)  # id(App) -> {fresh: quantifier}
    origin: dict = field(default_factory=dict)         # fresh var -> quantifier it instantiated
    pacc_vars: set = field(default_factory=set)        # vars instantiated at p-acc applications
    records: Optional[dict] = None                     # id(node) -> list[(env, result)]
    allow_label_reuse: bool = False


@dataclass
class CheckOutcome:
    result: TypeResult
    fresh_vars: list
    diagnostics: list
    program: object = None
    session: Optional[Session] = None

    @property
    def type(self):
        return self.result.type


# ------------------------------------------------------------------ prepare


class _Scope:
    def __init__(self):
        self.terms: dict = {}     # surface name -> (new name, label or None)
        self.structs: dict = {}   # surface name -> StructT


def prepare(expr, session: Session, closed: bool = True, env_names=()):
    """Resolve names; see the module docstring.  Raises on scoping errors."""
    scope = _Scope()
    for n in env_names:
        scope.terms[n] = (n, None)
    seen: set = set(env_names)
    labels: set = set()
    return _Prep(session, seen, labels, closed).expr(expr, scope)


class _Prep:
    def __init__(self, session, seen, labels, closed):
        self.s, self.seen, self.labels, self.closed = session, seen, labels, closed

    def bind(self, scope, name, label=None):
        new = name if name not in self.seen else self.s.terms.fresh(name)
        self.seen.add(new)
        scope.terms[name] = (new, label)
        return new

    def child(self, scope):
        c = _Scope()
        c.terms, c.structs = dict(scope.terms), dict(scope.structs)
        return c

    def expr(self, e, scope):
        R = dataclasses.replace
        match e:
            case Var(n):
                if n not in scope.terms:
                    cls = FreeVariable if self.closed else UnboundVariable
                    raise cls(f"unbound variable {n}", e.loc)
                return R(e, name=scope.terms[n][0])
            case NatLit() | BoolLit() | Prim():
                return R(e)  # every prepared node is a distinct object
            case StructRef() | PropRef():
                raise UnboundVariable(f"unbound name {e!r}", e.loc)
            case Lam(x, t, body):
                t = self.type(t, scope, set(), False, e.loc)
                inner = self.child(scope)
                x2 = self.bind(inner, x)
                return R(e, param=x2, annot=t, body=self.expr(body, inner))
            case App(f, a):
                return R(e, fn=self.expr(f, scope), arg=self.expr(a, scope))
            case If(a, b, c):
                return R(e, test=self.expr(a, scope), then=self.expr(b, scope), els=self.expr(c, scope))
            case Let(x, rhs, body):
                rhs = self.expr(rhs, scope)
                inner = self.child(scope)
                x2 = self.bind(inner, x)
                return R(e, name=x2, rhs=rhs, body=self.expr(body, inner))
            case Cons(a, b):
                return R(e, fst=self.expr(a, scope), snd=self.expr(b, scope))
            case Proj(w, t):
                return R(e, target=self.expr(t, scope))
            case LetProp(d, p, a, label, t, body):
                if label in self.labels and not self.s.allow_label_reuse:
                    raise PropertyRedeclared(f"property {label} is already declared", e.loc)
                self.labels.add(label)
                t = self.type(t, scope, set(), True, e.loc)
                inner = self.child(scope)
                d2 = self.bind(inner, d, label)
                p2, a2 = self.bind(inner, p), self.bind(inner, a)
                return R(e, desc=d2, pred=p2, acc=a2, value_type=t, body=self.expr(body, inner))
            case LetStruct(c, p, a, sn, ft, props, body):
                ft = self.type(ft, scope, set(), False, e.loc)
                labs, new_props = [], []
                inner_p = self.child(scope)
                stamp = next(self.s.stamps)
                for pname, _ in props:
                    if pname not in scope.terms or scope.terms[pname][1] is None:
                        raise NotAPropertyDescriptor(f"{pname} is not a property descriptor", e.loc)
                    labs.append(scope.terms[pname][1])
                if len(set(labs)) != len(labs):
                    raise TypeCheckError("a property is attached twice", e.loc)
                st = StructT(sn, ft, tuple(labs), stamp)
                # property values see the struct type, its predicate and accessor
                inner_p.structs[sn] = st
                p2 = self.bind(inner_p, p)
                a2 = self.bind(inner_p, a)
                for pname, pe in props:
                    new_props.append((scope.terms[pname][0], self.expr(pe, inner_p)))
                inner = self.child(inner_p)
                c2 = self.bind(inner, c)
                return R(e, ctor=c2, pred=p2, acc=a2, field_type=ft, props=tuple(new_props),
                         body=self.expr(body, inner), stamp=stamp, labels=tuple(labs))
        raise TypeError(f"unexpected node {e!r}")

    def type(self, t, scope, tbound, allow_self, loc):
        ty = lambda u: self.type(u, scope, tbound, allow_self, loc)
        match t:
            case TVar(n):
                if n in tbound:
                    return t
                if n in scope.structs:
                    return scope.structs[n]
                raise UnboundType(f"unknown type {n}", loc)
            case SelfT():
                if not allow_self:
                    raise SelfOutsideProperty("Self may only appear in a property value type", loc)
                return t
            case PairT(a, b):
                return PairT(ty(a), ty(b))
            case UnionT(ms):
                return UnionT(tuple(ty(m) for m in ms))
            case PropT(v):
                return PropT(self.type(v, scope, tbound, True, loc))
            case ArrowT(qs, x, d, r):
                tb = tbound | set(qs)
                d = self.type(d, scope, tb, allow_self, loc)
                from .syntax import _map_result_types
                r = _map_result_types(r, lambda u: self.type(u, scope, tb, allow_self, loc))
                for n, (new, _) in scope.terms.items():
                    if n != new and n != x:
                        r = subst_obj_result(r, n, Obj(new))
                return ArrowT(qs, x, d, r)
        return t


# ------------------------------------------------------------------ checker

DEAD = TypeResult(BOTTOM, FALSE_P, FALSE_P, NULL)


class Checker:
    def __init__(self, session: Session):
        self.s = session

    def fresh(self, hint: str) -> str:
        return self.s.types.fresh(hint)

    def check(self, env: TypeEnv, e) -> TypeResult:
        r = self._check(env, e)
        if self.s.records is not None:
            self.s.records.setdefault(id(e), []).append((env, r))
        return r

    def _accepts(self, env, r: TypeResult, t) -> bool:
        if subtype(env, r.type, t):
            return True
        return isinstance(r.obj, Obj) and proves(env, IsType(r.obj, t))

    def _check(self, env: TypeEnv, e) -> TypeResult:
        match e:
            case NatLit():
                return result(NAT, TRUE_P, FALSE_P)
            case BoolLit(True):
                return result(TRUE_T, TRUE_P, FALSE_P)
            case BoolLit(False):
                return result(FALSE_T, FALSE_P, TRUE_P)
            case Prim(op):
                return result(delta_type(op), TRUE_P, FALSE_P)
            case Var(x):
                if not bound(env, x):
                    raise UnboundVariable(f"unbound variable {display(x)}", e.loc)
                o = Obj(x)
                return TypeResult(lookup(env, o), NotType(o, FALSE_T), IsType(o, FALSE_T), o)
            case Lam(x, t, body):
                mark = len(self.s.types.issued)
                r = self.check(env.extend(IsType(Obj(x), t)), body)
                issued = self.s.types.issued[mark:]
                free = result_free_tvars(r)
                quants = tuple(v for v in issued if v in free)
                return result(arrow(x, t, r, quants), TRUE_P, FALSE_P)
            case App(f, a):
                return self._app(env, e, f, a)
            case If(test, then, els):
                rt = self.check(env, test)
                env_t, env_f = env.extend(rt.pos), env.extend(rt.neg)
                r2 = DEAD if env_t.normalized.absurd else self.check(env_t, then)
                r3 = DEAD if env_f.normalized.absurd else self.check(env_f, els)
                return self._join(env, rt, r2, r3)
            case Let(x, rhs, body):
                r1 = self.check(env, rhs)
                xo = Obj(x)
                psi_x = mk_or(mk_and(NotType(xo, FALSE_T), r1.pos), mk_and(IsType(xo, FALSE_T), r1.neg))
                facts = [IsType(xo, r1.type)]
                if isinstance(r1.obj, Obj):
                    facts.append(Alias(xo, r1.obj))
                facts.append(psi_x)
                r2 = self.check(env.extend(*facts), body)
                return subst_result(r2, x, r1.obj, r1.type, env)
            case Cons(a, b):
                ra, rb = self.check(env, a), self.check(env, b)
                return result(PairT(ra.type, rb.type))
            case Proj(which, target):
                r = self.check(env, target)
                t = flatten_union(r.type)
                if is_bottom(t):
                    return DEAD
                members = t.members if isinstance(t, UnionT) else (t,)
                if not all(isinstance(m, PairT) for m in members):
                    if isinstance(r.obj, Obj) and proves(env, IsType(r.obj, PairT(TOP, TOP))):
                        members = (PairT(TOP, TOP),)
                    else:
                        from .sexpr import pretty
                        raise NonPairProjection(f"{which} of non-pair type {display(pretty(r.type))}", e.loc)
                pt = union_of(*(m.fst if which == "fst" else m.snd for m in members))
                obj = Obj(r.obj.var, (which,) + r.obj.path) if isinstance(r.obj, Obj) else NULL
                if isinstance(obj, Obj):
                    known = lookup(env, obj)
                    if subtype(env, known, pt):
                        pt = known
                return TypeResult(pt, TRUE_P, TRUE_P, obj)
            case LetProp(d, p, a, label, tau, body):
                env2 = env.declare(label, tau)
                self.s.properties[label] = tau
                env2 = env2.extend(
                    IsType(Obj(d), PropT(tau)),
                    IsType(Obj(p), delta_s_type(PPredV(label))),
                    IsType(Obj(a), delta_s_type(PAccV(label, tau))),
                )
                r = self.check(env2, body)
                gone = {d, p, a}
                r = _erase_result(r, lambda o: isinstance(o, Obj) and o.var in gone, None, True, env)
                return erase_label(r, label)
            case LetStruct(c, p, a, sn, ft, props, body):
                st = StructT(sn, ft, e.labels, e.stamp)
                self.s.structs[e.stamp] = st
                pred_t, acc_t = delta_s_type(PredV(st)), delta_s_type(AccV(st))
                env_p = env.extend(IsType(Obj(p), pred_t), IsType(Obj(a), acc_t))
                for (dname, pe), label in zip(props, e.labels):
                    declared = env.properties.get(label)
                    if declared is None:
                        raise NotAPropertyDescriptor(f"property {label} is not declared", e.loc)
                    expected = replace_self(declared, st)
                    rp = self.check(env_p, pe)
                    if not self._accepts(env_p, rp, expected):
                        raise TypeMismatch(expected, rp.type, pe.loc or e.loc, f"value of property {label}")
                env_b = env_p.extend(IsType(Obj(c), delta_s_type(CtorV(st, ()))))
                r = self.check(env_b, body)
                gone = {c, p, a}
                return _erase_result(r, lambda o: isinstance(o, Obj) and o.var in gone, None, True, env)
        raise TypeError(f"cannot check {e!r}")

    def _app(self, env, e, f, a) -> TypeResult:
        rf = self.check(env, f)
        ft = flatten_union(rf.type)
        if is_bottom(ft):
            self.check(env.extend(rf.pos), a)
            return DEAD
        if not isinstance(ft, ArrowT):
            from .sexpr import pretty
            raise NotAFunction(f"cannot apply a value of type {display(pretty(rf.type))}", e.loc)
        env_a = env.extend(rf.pos)
        ra = self.check(env_a, a)
        inst = {}
        if ft.quants:
            m = {}
            for q in ft.quants:
                v = self.fresh(q.split("%", 1)[0])
                m[q] = TVar(v)
                inst[v] = q
                self.s.origin[v] = q
            dom = subst_tvars(ft.dom, m)
            res = subst_tvars_result(ft.res, m)
            self.s.instantiations[id(e)] = inst
            if _is_pacc_type(ft):
                self.s.pacc_vars.update(inst)
        else:
            dom, res = ft.dom, ft.res
        if not self._accepts(env_a, ra, dom):
            raise TypeMismatch(dom, ra.type, e.loc or a.loc, "argument")
        return subst_result(res, ft.param, ra.obj, ra.type, env_a)

    def _join(self, env, rt, r2, r3) -> TypeResult:
        if r2 is DEAD:
            return r3
        if r3 is DEAD:
            return r2
        if subtype(env, r2.type, r3.type):
            t = r3.type
        elif subtype(env, r3.type, r2.type):
            t = r2.type
        else:
            t = union_of(r2.type, r3.type)
        pos = r2.pos if r2.pos == r3.pos else mk_or(mk_and(rt.pos, r2.pos), mk_and(rt.neg, r3.pos))
        neg = r2.neg if r2.neg == r3.neg else mk_or(mk_and(rt.pos, r2.neg), mk_and(rt.neg, r3.neg))
        obj = r2.obj if r2.obj == r3.obj else NULL
        return TypeResult(t, pos, neg, obj)


def _is_pacc_type(t) -> bool:
    return t.quants == (SELF_QUANT,)


# ------------------------------------------------------------------ entry


def check(env: TypeEnv, expr, session: Optional[Session] = None) -> CheckOutcome:
    """Check a prepared expression under ``env``; errors propagate."""
    session = session or Session()
    mark = len(session.types.issued)
    r = Checker(session).check(env, expr)
    return CheckOutcome(r, session.types.issued[mark:], [], expr, session)


def check_program(expr, session: Optional[Session] = None, record: bool = False) -> CheckOutcome:
    """Prepare and check a closed program."""
    session = session or Session()
    if record:
        session.records = {}
    prepared = prepare(expr, session)
    return check(TypeEnv(), prepared, session)


def diagnostic(err: Exception) -> dict:
    loc = getattr(err, "loc", None) or (getattr(err, "line", None), getattr(err, "col", None))
    return {
        "code": getattr(err, "code", "error"),
        "message": getattr(err, "message", str(err)),
        "line": loc[0] if loc else None,
        "col": loc[1] if loc else None,
    }
