"""Environment-based big-step evaluation with trapped stuck states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from .syntax import (
    FALSE_V,
    TRUE_V,
    AccV,
    App,
    BoolLit,
    ClosureV,
    Cons,
    CtorV,
    DescV,
    FalseV,
    If,
    Lam,
    Let,
    LetProp,
    LetStruct,
    NatLit,
    NatV,
    PAccV,
    PPredV,
    PairV,
    PredV,
    Prim,
    PrimV,
    Proj,
    StructT,
    StructV,
    TrueV,
    Var,
)

DEFAULT_FUEL = 1_000_000
MAX_DEPTH = 10_000  # nested evaluations; running out counts as fuel

STUCK_KINDS = ("unbound-variable", "apply-non-function", "delta-domain", "projection-non-pair", "missing-property", "fuel")


class StuckError(Exception):
    def __init__(self, kind: str, detail: str = "", loc=None):
        assert kind in STUCK_KINDS, kind
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind, self.detail, self.loc = kind, detail, loc


@dataclass
class EvalOutcome:
    value: object = None
    error: Optional[StuckError] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _b(x: bool):
    return TRUE_V if x else FALSE_V


def delta(op: str, v):
    match op:
        case "not":
            return _b(isinstance(v, FalseV))
        case "add1":
            if isinstance(v, NatV):
                return NatV(v.n + 1)
            raise StuckError("delta-domain", "add1 expects a natural")
        case "nat?":
            return _b(isinstance(v, NatV))
        case "bool?":
            return _b(isinstance(v, (TrueV, FalseV)))
        case "pair?":
            return _b(isinstance(v, PairV))
    raise StuckError("delta-domain", f"unknown primitive {op}")


def delta_s(sov, v):
    match sov:
        case CtorV(st, pvs):
            return StructV(st.name, st.stamp, v, st.field, pvs)
        case PredV(st):
            return _b(isinstance(v, StructV) and v.stamp == st.stamp)
        case AccV(st):
            if isinstance(v, StructV) and v.stamp == st.stamp:
                return v.field
            raise StuckError("missing-property", f"{st.name} accessor applied to another value")
        case PPredV(label):
            return _b(isinstance(v, StructV) and v.prop(label) is not None)
        case PAccV(label, _):
            if isinstance(v, StructV) and v.prop(label) is not None:
                return v.prop(label)
            raise StuckError("missing-property", f"value lacks property {label}")
    raise StuckError("delta-domain", f"not a struct operation: {sov!r}")


class Evaluator:
    """``on_node(node, env, value)`` is called after each node produces a
    value; ``on_apply(node, fn, arg)`` before each application."""

    def __init__(self, fuel: int = DEFAULT_FUEL, on_node: Optional[Callable] = None,
                 on_apply: Optional[Callable] = None, max_depth: int = MAX_DEPTH):
        self.fuel = fuel
        self.on_node, self.on_apply = on_node, on_apply
        self.depth, self.max_depth = 0, max_depth

    def eval(self, env: Mapping, e):
        self.fuel -= 1
        if self.fuel < 0:
            raise StuckError("fuel", "step budget exhausted", e.loc)
        self.depth += 1
        if self.depth > self.max_depth:
            raise StuckError("fuel", "nesting depth exhausted", e.loc)
        try:
            v = self._eval(env, e)
        finally:
            self.depth -= 1
        if self.on_node is not None:
            self.on_node(e, env, v)
        return v

    def _eval(self, env, e):
        match e:
            case NatLit(n):
                return NatV(n)
            case BoolLit(b):
                return _b(b)
            case Prim(op):
                return PrimV(op)
            case Var(x):
                if x not in env:
                    raise StuckError("unbound-variable", x, e.loc)
                return env[x]
            case Lam(x, t, body):
                return ClosureV(env, x, t, body)
            case App(f, a):
                fv = self.eval(env, f)
                av = self.eval(env, a)
                if self.on_apply is not None:
                    self.on_apply(e, fv, av)
                return self.apply(fv, av, e)
            case If(test, then, els):
                if isinstance(self.eval(env, test), FalseV):
                    return self.eval(env, els)
                return self.eval(env, then)
            case Let(x, rhs, body):
                v = self.eval(env, rhs)
                return self.eval({**env, x: v}, body)
            case Cons(a, b):
                return PairV(self.eval(env, a), self.eval(env, b))
            case Proj(which, target):
                v = self.eval(env, target)
                if not isinstance(v, PairV):
                    raise StuckError("projection-non-pair", which, e.loc)
                return v.fst if which == "fst" else v.snd
            case LetProp(d, p, a, label, tau, body):
                env2 = {**env, d: DescV(label, tau), p: PPredV(label), a: PAccV(label, tau)}
                return self.eval(env2, body)
            case LetStruct(c, p, a, sn, ft, props, body):
                stamp = e.stamp if e.stamp is not None else id(e)
                labels = []
                for dname, _ in props:
                    dv = env.get(dname)
                    if not isinstance(dv, DescV):
                        raise StuckError("delta-domain", f"{dname} is not a property descriptor", e.loc)
                    labels.append(dv.label)
                st = StructT(sn, ft, tuple(labels), stamp)
                env_p = {**env, p: PredV(st), a: AccV(st)}
                values = tuple((label, self.eval(env_p, pe)) for label, (_, pe) in zip(labels, props))
                return self.eval({**env_p, c: CtorV(st, values)}, body)
        raise TypeError(f"cannot evaluate {e!r}")

    def apply(self, fv, av, node=None):
        match fv:
            case ClosureV(cenv, x, _, body):
                return self.eval({**cenv, x: av}, body)
            case PrimV(op):
                try:
                    return delta(op, av)
                except StuckError as err:
                    err.loc = err.loc or (node.loc if node else None)
                    raise
            case CtorV() | PredV() | AccV() | PPredV() | PAccV():
                try:
                    return delta_s(fv, av)
                except StuckError as err:
                    err.loc = err.loc or (node.loc if node else None)
                    raise
        from .sexpr import pretty
        raise StuckError("apply-non-function", f"cannot apply {pretty(fv)}", node.loc if node else None)


def evaluate(env: Mapping, expr, fuel: int = DEFAULT_FUEL, **hooks) -> EvalOutcome:
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    ev = Evaluator(fuel, **hooks)
    try:
        return EvalOutcome(value=ev.eval(dict(env), expr))
    except StuckError as err:
        return EvalOutcome(error=err)
    except RecursionError:
        return EvalOutcome(error=StuckError("fuel", "recursion depth exhausted", getattr(expr, "loc", None)))
