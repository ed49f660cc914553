"""Deterministic type-directed generation of closed, well-typed programs.

Generation picks a goal type and builds an expression for it, tracking
the types of variables in scope.  The checker is the final judge: a
candidate it rejects is discarded and generation retries with the same
random stream, so the output is still a function of (seed, size).
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, replace
from typing import Optional

from .syntax import (
    BOOL,
    FALSE_T,
    NAT,
    SELF,
    TOP,
    TRUE_T,
    App,
    ArrowT,
    BoolLit,
    Cons,
    HasPropT,
    If,
    Lam,
    Let,
    LetProp,
    LetStruct,
    NatLit,
    PairT,
    Prim,
    Proj,
    SelfT,
    StructT,
    TVar,
    Top,
    UnionT,
    Var,
    arrow,
    replace_self,
    result,
    walk,
)
from .typecheck import TypeCheckError, check_program


@dataclass(frozen=True)
class StructInfo:
    name: str
    ctor: str
    pred: str
    acc: str
    stype: StructT


@dataclass(frozen=True)
class PropInfo:
    label: str
    desc: str
    pred: str
    acc: str
    value_type: object


@dataclass(frozen=True)
class Ctx:
    vars: tuple = ()      # (name, type)
    structs: tuple = ()   # StructInfo
    props: tuple = ()     # PropInfo
    ctors: frozenset = frozenset()  # struct names whose constructor is in scope

    def bind(self, name, t) -> "Ctx":
        return replace(self, vars=self.vars + ((name, t),))


def surface(t):
    """Internal type to the type a user would write."""
    match t:
        case StructT(name=n):
            return TVar(n)
        case PairT(a, b):
            return PairT(surface(a), surface(b))
        case UnionT(ms):
            return UnionT(tuple(surface(m) for m in ms))
        case ArrowT(qs, x, d, r):
            return ArrowT(qs, x, surface(d), result(surface(r.type)))
    return t


def fits(t, goal) -> bool:
    if isinstance(goal, Top) or t == goal:
        return True
    if isinstance(t, UnionT):
        return all(fits(m, goal) for m in t.members)
    if isinstance(goal, UnionT):
        return any(fits(t, m) for m in goal.members)
    match t, goal:
        case PairT(a, b), PairT(c, d):
            return fits(a, c) and fits(b, d)
        case StructT(props=ps), HasPropT(l):
            return l in ps
    return False


BASE_GOALS = (NAT, BOOL, TRUE_T, FALSE_T, TOP, UnionT((NAT, FALSE_T)), PairT(NAT, BOOL))
PROP_TYPES = (
    NAT,
    arrow("x", SELF, result(NAT)),
    arrow("x", SELF, result(BOOL)),
    arrow("x", SELF, result(SELF)),
)
FIELD_TYPES = (NAT, BOOL, PairT(NAT, BOOL), NAT)


class Generator:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0
        self.decls = 0

    def name(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def chance(self, p: float) -> bool:
        return self.rng.random() < p

    # -- goals

    def small_type(self, ctx: Ctx, depth: int = 0):
        choices = list(BASE_GOALS)
        built = [s for s in ctx.structs if s.name in ctx.ctors]
        choices += [s.stype for s in built]
        choices += [HasPropT(p.label) for p in ctx.props if any(p.label in s.stype.props for s in built)]
        if depth == 0 and self.chance(0.15):
            return arrow("x", self.rng.choice((NAT, TOP, BOOL)), result(self.rng.choice((NAT, BOOL, TOP))))
        return self.rng.choice(choices)

    # -- entry

    def program(self, size: int):
        goal = self.rng.choice(BASE_GOALS + (arrow("x", NAT, result(NAT)),))
        ctx = Ctx()
        if size >= 12 and self.chance(0.4):
            return self.declare_property(goal, ctx, size, chain=True)
        return self.gen(goal, ctx, size)

    # -- expressions

    def gen(self, goal, ctx: Ctx, size: int):
        if size <= 1:
            return self.leaf(goal, ctx)
        options = [
            (3, self.p_if), (3, self.p_let), (2, self.p_beta), (3, self.p_occurrence),
            (4, self.p_specific), (2, self.p_call_var),
        ]
        if size >= 8 and self.decls < 4:
            options.append((2, self.p_struct))
            options.append((1, self.p_property))
        if self.extractable(goal, ctx):
            options.append((5, self.p_extract))
        total = sum(w for w, _ in options)
        for _ in range(4):
            pick = self.rng.uniform(0, total)
            for w, f in options:
                pick -= w
                if pick <= 0:
                    break
            e = f(goal, ctx, size)
            if e is not None:
                return e
        return self.leaf(goal, ctx)

    def split(self, size: int, parts: int) -> list:
        size = max(size - 1, parts)
        cuts = sorted(self.rng.randint(0, size) for _ in range(parts - 1))
        out, prev = [], 0
        for c in cuts + [size]:
            out.append(max(1, c - prev))
            prev = c
        return out

    def leaf(self, goal, ctx: Ctx):
        vs = [n for n, t in ctx.vars if fits(t, goal)]
        if vs and self.chance(0.5):
            return Var(self.rng.choice(vs))
        match goal:
            case Top():
                return self.leaf(self.rng.choice((NAT, BOOL)), ctx)
            case UnionT(ms) if ms:
                return self.leaf(self.rng.choice(ms), ctx)
            case _ if goal == NAT:
                return NatLit(self.rng.randint(0, 5))
            case _ if goal == TRUE_T:
                return BoolLit(True)
            case _ if goal == FALSE_T:
                return BoolLit(False)
            case PairT(a, b):
                return Cons(self.leaf(a, ctx), self.leaf(b, ctx))
            case ArrowT(_, _, d, r):
                prims = [op for op, t in (("add1", arrow("x", NAT, result(NAT))),
                                          ("nat?", arrow("x", TOP, result(BOOL))),
                                          ("not", arrow("x", TOP, result(BOOL))),
                                          ("pair?", arrow("x", TOP, result(BOOL))))
                         if fits(d, t.dom) and fits(t.res.type, r.type)]
                if prims and self.chance(0.4):
                    return Prim(self.rng.choice(prims))
                x = self.name("x")
                return Lam(x, surface(d), self.leaf(r.type, ctx.bind(x, d)))
            case StructT():
                info = self.struct_info(ctx, goal)
                if info is not None and info.name in ctx.ctors:
                    return App(Var(info.ctor), self.leaf(info.stype.field, ctx))
            case HasPropT(l):
                carriers = [s for s in ctx.structs if l in s.stype.props and s.name in ctx.ctors]
                if carriers:
                    s = self.rng.choice(carriers)
                    return App(Var(s.ctor), self.leaf(s.stype.field, ctx))
        if vs:
            return Var(self.rng.choice(vs))
        return NatLit(0) if fits(NAT, goal) else BoolLit(False)

    def struct_info(self, ctx, st):
        for s in ctx.structs:
            if s.stype == st:
                return s
        return None

    # -- productions

    def p_if(self, goal, ctx, size):
        a, b, c = self.split(size, 3)
        return If(self.gen(self.rng.choice((BOOL, TOP, BOOL)), ctx, a), self.gen(goal, ctx, b), self.gen(goal, ctx, c))

    def p_let(self, goal, ctx, size):
        a, b = self.split(size, 2)
        t = self.small_type(ctx)
        x = self.name("x")
        return Let(x, self.gen(t, ctx, a), self.gen(goal, ctx.bind(x, t), b))

    def p_beta(self, goal, ctx, size):
        a, b = self.split(size, 2)
        t = self.small_type(ctx)
        x = self.name("x")
        return App(Lam(x, surface(t), self.gen(goal, ctx.bind(x, t), a)), self.gen(t, ctx, b))

    def p_occurrence(self, goal, ctx, size):
        a, b, c = self.split(size, 3)
        x = self.name("x")
        kind = self.rng.choice(("nat?", "pair?", "truthy", "bool?", "struct"))
        if kind == "truthy":
            t, refined, test = UnionT((NAT, FALSE_T)), NAT, Var(x)
        elif kind == "struct" and ctx.structs:
            s = self.rng.choice(ctx.structs)
            t, refined, test = TOP, s.stype, App(Var(s.pred), Var(x))
        elif kind == "pair?":
            t, refined, test = TOP, PairT(TOP, TOP), App(Prim("pair?"), Var(x))
        elif kind == "bool?":
            t, refined, test = TOP, BOOL, App(Prim("bool?"), Var(x))
        else:
            t, refined, test = self.rng.choice((TOP, UnionT((NAT, BOOL)))), NAT, App(Prim("nat?"), Var(x))
        rhs = self.gen(t, ctx, a)
        then = self.gen(goal, ctx.bind(x, refined), b)
        if kind == "pair?" and fits(TOP, goal) and self.chance(0.5):
            then = Proj(self.rng.choice(("fst", "snd")), Var(x))
        return Let(x, rhs, If(test, then, self.gen(goal, ctx.bind(x, t), c)))

    def p_call_var(self, goal, ctx, size):
        fs = [(n, t) for n, t in ctx.vars if isinstance(t, ArrowT) and not t.quants and fits(t.res.type, goal)]
        if not fs:
            return None
        n, t = self.rng.choice(fs)
        return App(Var(n), self.gen(t.dom, ctx, size - 1))

    def p_specific(self, goal, ctx, size):
        rng = self.rng
        if isinstance(goal, Top):
            return self.gen(self.small_type(ctx), ctx, size)
        if isinstance(goal, UnionT) and goal.members:
            return self.gen(rng.choice(goal.members), ctx, size)
        if goal == NAT:
            choice = rng.randrange(4)
            if choice == 0:
                return App(Prim("add1"), self.gen(NAT, ctx, size - 1))
            if choice == 1:
                which = rng.choice(("fst", "snd"))
                other = self.small_type(ctx)
                pt = PairT(NAT, other) if which == "fst" else PairT(other, NAT)
                return Proj(which, self.gen(pt, ctx, size - 1))
            ss = [s for s in ctx.structs if fits(s.stype.field, NAT) and s.name in ctx.ctors]
            if ss:
                s = rng.choice(ss)
                return App(Var(s.acc), self.gen(s.stype, ctx, size - 1))
            return App(Prim("add1"), self.gen(NAT, ctx, size - 1))
        if goal in (BOOL, TRUE_T, FALSE_T):
            preds = [Prim("nat?"), Prim("bool?"), Prim("pair?"), Prim("not")]
            preds += [Var(s.pred) for s in ctx.structs] + [Var(p.pred) for p in ctx.props]
            if goal != BOOL:
                return If(self.gen(BOOL, ctx, size - 1), self.leaf(goal, ctx), self.leaf(goal, ctx))
            return App(rng.choice(preds), self.gen(self.small_type(ctx), ctx, size - 1))
        if isinstance(goal, PairT):
            a, b = self.split(size, 2)
            return Cons(self.gen(goal.fst, ctx, a), self.gen(goal.snd, ctx, b))
        if isinstance(goal, ArrowT):
            x = self.name("x")
            return Lam(x, surface(goal.dom), self.gen(goal.res.type, ctx.bind(x, goal.dom), size - 1))
        if isinstance(goal, StructT):
            s = self.struct_info(ctx, goal)
            if s is not None and s.name in ctx.ctors:
                return App(Var(s.ctor), self.gen(goal.field, ctx, size - 1))
            return None
        if isinstance(goal, HasPropT):
            carriers = [s for s in ctx.structs if goal.label in s.stype.props]
            if carriers:
                return self.gen(self.rng.choice(carriers).stype, ctx, size)
        return None

    # -- declarations

    def p_property(self, goal, ctx, size):
        return self.declare_property(goal, ctx, size, chain=False)

    def declare_property(self, goal, ctx, size, chain):
        self.decls += 1
        k = self.name("")
        info = PropInfo(f"lab{k}", f"pd{k}", f"has{k}?", f"get{k}", self.rng.choice(PROP_TYPES))
        inner = replace(ctx, props=ctx.props + (info,))
        if chain:
            body = self.declare_struct(goal, inner, size - 1, force=info)
        else:
            body = self.gen(goal, inner, size - 1)
        return LetProp(info.desc, info.pred, info.acc, info.label, info.value_type, body)

    def p_struct(self, goal, ctx, size):
        return self.declare_struct(goal, ctx, size, force=None)

    def declare_struct(self, goal, ctx, size, force: Optional[PropInfo]):
        self.decls += 1
        k = self.name("")
        name = f"S{k}"
        props = [p for p in ctx.props if self.chance(0.6) or p is force]
        st = StructT(name, self.rng.choice(FIELD_TYPES), tuple(p.label for p in props), -self.counter)
        info = StructInfo(name, f"mk{name}", f"{name}?", f"{name}-f", st)
        ctx_p = replace(ctx, structs=ctx.structs + (info,))
        budget = max(1, size // (2 + len(props)))
        values = []
        for p in props:
            values.append((p.desc, self.property_value(p, st, ctx_p, budget)))
        ctx_b = replace(ctx_p, ctors=ctx_p.ctors | {name})
        if force is not None and self.extractable(goal, ctx_b):
            body = self.p_extract(goal, ctx_b, size - budget, prefer=force)
        else:
            body = self.gen(goal, ctx_b, max(1, size - budget * len(props)))
        return LetStruct(info.ctor, info.pred, info.acc, name, surface(st.field), tuple(values), body)

    def property_value(self, p: PropInfo, st, ctx, size):
        want = replace_self(p.value_type, st)
        if isinstance(want, ArrowT):
            this = self.name("this")
            inner = ctx.bind(this, st)
            res = want.res.type
            if res == st:
                body = Var(this)
            elif res == NAT and fits(st.field, NAT) and self.chance(0.6):
                body = App(Var(ctx.structs[-1].acc), Var(this))
            else:
                body = self.gen(res, inner, size - 1)
            return Lam(this, surface(st), body)
        return self.gen(want, ctx, size)

    # -- method extraction

    def extractable(self, goal, ctx, prefer=None):
        out = []
        for p in ctx.props:
            if prefer is not None and p is not prefer:
                continue
            carriers = [s for s in ctx.structs if p.label in s.stype.props and s.name in ctx.ctors]
            if not carriers:
                continue
            vt = p.value_type
            res = vt.res.type if isinstance(vt, ArrowT) else vt
            if isinstance(res, SelfT):
                if isinstance(goal, Top):
                    out.append((p, carriers))
            elif fits(res, goal):
                out.append((p, carriers))
        return out

    def p_extract(self, goal, ctx, size, prefer=None):
        cands = self.extractable(goal, ctx, prefer) or self.extractable(goal, ctx)
        if not cands:
            return None
        p, carriers = self.rng.choice(cands)
        s = self.rng.choice(carriers)
        recv = self.gen(self.rng.choice((s.stype, HasPropT(p.label))), ctx, max(1, size - 4))
        v = self.name("v")
        if isinstance(p.value_type, ArrowT):
            call = App(App(Var(p.acc), Var(v)), Var(v))
        else:
            call = App(Var(p.acc), Var(v))
        if self.chance(0.5):
            return Let(v, recv, call)
        return App(Lam(v, HasPropT(p.label), call), recv)


# -- mutation


def _rebuild(e, target, new):
    if e is target:
        return new
    changes = {}
    for f in dataclasses.fields(e):
        v = getattr(e, f.name)
        if isinstance(v, tuple) and v and isinstance(v[0], tuple):
            nv = tuple((k, _rebuild(x, target, new)) for k, x in v)
        elif dataclasses.is_dataclass(v) and f.name not in ("annot", "field_type", "value_type"):
            nv = _rebuild(v, target, new)
        else:
            continue
        if nv is not v:
            changes[f.name] = nv
    return dataclasses.replace(e, **changes) if changes else e


def mutate(prog, rng: random.Random):
    """Replace a random subterm by another subterm of the same program or
    by a literal.  The result is usually ill-typed; the checker decides."""
    nodes = list(walk(prog))
    target = rng.choice(nodes)
    pick = rng.random()
    if pick < 0.6:
        donor = rng.choice(nodes)
        if donor is target:
            return None
        new = donor
    elif pick < 0.8:
        new = rng.choice((NatLit(0), BoolLit(True), BoolLit(False), Prim("add1"), Cons(NatLit(1), BoolLit(True))))
    else:
        if not isinstance(target, App):
            return None
        new = App(target.arg, target.fn)
    return _rebuild(prog, target, new)


def generate_program(seed: int, size: int):
    return generate_checked(seed, size)[0]


def generate_checked(seed: int, size: int, attempts: int = 12, mutants: bool = False):
    """A well-typed program for (seed, size) together with its check
    outcome.  With ``mutants``, half the seeds instead yield an accepted
    mutation of the generated program when one is found."""
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = random.Random(f"etr-{seed}-{size}")
    for _ in range(attempts):
        g = Generator(rng)
        try:
            prog = g.program(size)
        except RecursionError:
            continue
        try:
            outcome = check_program(prog)
        except (TypeCheckError, RecursionError):
            continue
        if mutants and rng.random() < 0.5:
            for _ in range(6):
                m = mutate(prog, rng)
                if m is None:
                    continue
                try:
                    return m, check_program(m)
                except (TypeCheckError, RecursionError):
                    pass
        return prog, outcome
    prog = NatLit(seed % 10)
    return prog, check_program(prog)
