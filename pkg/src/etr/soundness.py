"""Empirical checks of type soundness.

The satisfaction relation, a value-typing judgment, and runners that check
programs end to end: check, evaluate, then compare the value against the
checked type result.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional

from .eval import DEFAULT_FUEL, evaluate
from .logic import TypeEnv, overlap, proves
from .subtyping import subtype
from .syntax import (
    BOOL,
    FALSE_T,
    NAT,
    TOP,
    TRUE_T,
    Alias,
    And,
    ArrowT,
    AccV,
    ClosureV,
    CtorV,
    DescV,
    FF,
    FalseV,
    HasPropT,
    IsType,
    Lam,
    NameSupply,
    NatV,
    NotType,
    NullObj,
    Obj,
    Or,
    PAccV,
    PPredV,
    PairT,
    PairV,
    PredV,
    PrimV,
    PropT,
    StructT,
    StructV,
    TT,
    TVar,
    Top,
    TrueV,
    UnionT,
    alpha_equal,
    flatten_union,
    free_vars,
    obj_vars_type,
    subst_obj_type,
    prop_free_tvars,
    result,
    subst_tvars,
    type_free_tvars,
)
from .typecheck import Checker, Session, TypeCheckError, check_program, delta_s_type, delta_type


class UnresolvableObject(Exception):
    pass


def resolve(env, o: Obj):
    if o.var not in env:
        raise UnresolvableObject(f"{o.var} is not bound")
    v = env[o.var]
    for f in reversed(o.path):
        if not isinstance(v, PairV):
            raise UnresolvableObject(f"{f} of a non-pair")
        v = v.fst if f == "fst" else v.snd
    return v


def same_value(a, b) -> bool:
    match a, b:
        case PairV(a1, a2), PairV(b1, b2):
            return same_value(a1, b1) and same_value(a2, b2)
        case StructV(), StructV():
            return a.stamp == b.stamp and same_value(a.field, b.field) and all(
                same_value(x, y) for (_, x), (_, y) in zip(a.props, b.props))
    return a is b or a == b


class Model:
    """Everything value typing needs from a checking session: declared
    properties, and the receivers observed for each existential instance."""

    def __init__(self, session: Optional[Session] = None):
        self.session = session or Session()
        self.witnesses: dict = {}  # type variable -> list of struct types
        self.notes: list = []
        self._closure_types: dict = {}
        self._recheck = itertools.count()

    # -- witnesses

    def record(self, var: str, receiver):
        if isinstance(receiver, StructV):
            ws = self.witnesses.setdefault(var, [])
            st = receiver.struct_type
            if all(w.stamp != st.stamp for w in ws):
                ws.append(st)

    def witness_types(self, var: str):
        """Witness types of ``var``, following instantiation back to the
        quantifier it came from.  ``None`` when nothing is known."""
        out, seen = [], set()
        found = False
        while var is not None and var not in seen:
            seen.add(var)
            if var in self.witnesses:
                found = True
                out.extend(self.witnesses[var])
            var = self.session.origin.get(var)
        return out if found else None

    def env(self) -> TypeEnv:
        return TypeEnv((), self.session.properties)

    # -- value typing

    def shape(self, v):
        """A type of ``v`` precise enough for overlap tests."""
        match v:
            case NatV():
                return NAT
            case TrueV():
                return TRUE_T
            case FalseV():
                return FALSE_T
            case PairV(a, b):
                return PairT(self.shape(a), self.shape(b))
            case StructV():
                return v.struct_type
            case DescV(_, t):
                return PropT(t)
            case PrimV(op):
                return delta_type(op)
            case CtorV() | PredV() | AccV() | PPredV() | PAccV():
                return delta_s_type(v)
            case ClosureV(_, x, t, _):
                return ArrowT((), x, t, result(TOP))
        return TOP

    def value_type(self, v):
        """The most precise type of a value; closures are re-checked."""
        if isinstance(v, ClosureV):
            return self.closure_type(v)
        match v:
            case PairV(a, b):
                return PairT(self.value_type(a), self.value_type(b))
        return self.shape(v)

    def closure_type(self, c: ClosureV, extra: tuple = ()):
        key = (id(c), extra)
        if key in self._closure_types:
            return self._closure_types[key][1]
        lam = Lam(c.param, c.annot, c.body)
        elems = list(extra) + list(self.captured_facts(c))
        s = Session(types=NameSupply(f"c{next(self._recheck)}."), structs=self.session.structs,
                    properties=self.session.properties)
        try:
            t = Checker(s).check(TypeEnv(elems, self.session.properties), lam).type
        except TypeCheckError as err:
            self.notes.append(f"closure re-check failed: {err.message}")
            t = None
        self._closure_types[key] = (c, t)  # keep c alive so its id stays unique
        return t

    def captured_facts(self, c: ClosureV) -> tuple:
        """Types of captured values, following captured closures so that
        objects their types mention stay bound."""
        facts, seen, todo = [], set(), [c]
        while todo and len(seen) < 64:
            cur = todo.pop(0)
            for y in sorted(free_vars(Lam(cur.param, cur.annot, cur.body))):
                if y in seen or y not in cur.env:
                    continue
                seen.add(y)
                v = cur.env[y]
                facts.append(IsType(Obj(y), self.value_type(v)))
                if isinstance(v, ClosureV):
                    todo.append(v)
        return tuple(facts)

    def outer_facts(self, c: ClosureV, t, rho) -> tuple:
        """Facts relating a closure's captured variables to the variables of
        the surrounding runtime environment that a claimed type mentions."""
        facts = []
        lam_free = free_vars(Lam(c.param, c.annot, c.body))
        for z in sorted(obj_vars_type(t)):
            if z not in rho or z in lam_free:
                continue
            facts.append(IsType(Obj(z), self.value_type(rho[z])))
            for y in sorted(lam_free):
                if y in c.env and same_value(c.env[y], rho[z]):
                    facts.append(Alias(Obj(y), Obj(z)))
        return tuple(facts)

    def has_type(self, v, t, rho=None) -> bool:
        t = flatten_union(t)
        match t:
            case Top():
                return True
            case UnionT(ms):
                return any(self.has_type(v, m, rho) for m in ms)
            case TVar(name):
                ws = self.witness_types(name)
                if ws is None:
                    return True
                return isinstance(v, StructV) and any(w.stamp == v.stamp for w in ws)
        match v:
            case NatV():
                return t == NAT
            case TrueV():
                return t == TRUE_T
            case FalseV():
                return t == FALSE_T
            case PairV(a, b):
                return isinstance(t, PairT) and self.has_type(a, t.fst, rho) and self.has_type(b, t.snd, rho)
            case StructV():
                if isinstance(t, StructT):
                    return t.stamp == v.stamp and self.has_type(v.field, t.field)
                if isinstance(t, HasPropT):
                    return v.prop(t.label) is not None and t.label in self.session.properties
                return False
            case DescV(_, vt):
                return isinstance(t, PropT) and alpha_equal(vt, t.value)
            case ClosureV():
                if not isinstance(t, ArrowT):
                    return False
                ct = self.closure_type(v)
                if ct is not None and self._arrow_below(ct, t, self.captured_facts(v)):
                    return True
                extra = self.outer_facts(v, t, rho) if rho else ()
                if not extra:
                    return False
                ct = self.closure_type(v, extra)
                if ct is None:
                    return False
                # name captured variables by the outer variables they alias
                for f in extra:
                    if isinstance(f, Alias):
                        ct = subst_obj_type(ct, f.left.var, f.right)
                return self._arrow_below(ct, t, extra + self.captured_facts(v))
            case PrimV() | CtorV() | PredV() | AccV() | PPredV() | PAccV():
                return isinstance(t, ArrowT) and self._arrow_below(self.shape(v), t)
        return False

    def _arrow_below(self, have, want, extra=()) -> bool:
        env = self.env().extend(*extra)
        if subtype(env, have, want):
            return True
        # free type variables stand for their witnesses
        free = sorted(type_free_tvars(want))
        options = []
        for x in free:
            ws = self.witness_types(x)
            options.append(ws if ws else [TOP])
        for combo in itertools.islice(itertools.product(*options), 64):
            if subtype(env, have, subst_tvars(want, dict(zip(free, combo)))):
                return True
        return False

    # -- satisfaction

    def satisfies(self, env, p) -> bool:
        match p:
            case TT():
                return True
            case FF():
                return False
            case IsType(o, t):
                return self.has_type(resolve(env, o), t, env)
            case NotType(o, t):
                return not overlap(self.env(), self.shape(resolve(env, o)), t)
            case And(a, b):
                shared = prop_free_tvars(a) & prop_free_tvars(b)
                if shared:
                    self.notes.append(f"conjuncts share type variables {sorted(shared)}")
                return self.satisfies(env, a) and self.satisfies(env, b)
            case Or(a, b):
                return self.satisfies(env, a) or self.satisfies(env, b)
            case Alias(a, b):
                return same_value(resolve(env, a), resolve(env, b))
        raise TypeError(p)


def satisfies(env, prop, model: Optional[Model] = None) -> bool:
    return (model or Model()).satisfies(env, prop)


def value_has_type(v, t, model: Optional[Model] = None) -> bool:
    return (model or Model()).has_type(v, t)


# ------------------------------------------------------------------ reports


@dataclass
class SoundnessReport:
    programs_run: int = 0
    value_type_violations: list = field(default_factory=list)
    proposition_violations: list = field(default_factory=list)
    object_violations: list = field(default_factory=list)
    stuck_well_typed: list = field(default_factory=list)
    fuel_exhausted: int = 0
    notes: list = field(default_factory=list)
    features: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return (len(self.value_type_violations) + len(self.proposition_violations)
                + len(self.object_violations) + len(self.stuck_well_typed))

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def merge(self, other: "SoundnessReport") -> "SoundnessReport":
        self.programs_run += other.programs_run
        self.value_type_violations += other.value_type_violations
        self.proposition_violations += other.proposition_violations
        self.object_violations += other.object_violations
        self.stuck_well_typed += other.stuck_well_typed
        self.fuel_exhausted += other.fuel_exhausted
        self.notes += other.notes
        for k, n in other.features.items():
            self.features[k] = self.features.get(k, 0) + n
        return self

    def to_json(self) -> dict:
        return {
            "programs_run": self.programs_run,
            "violations": self.violations,
            "value_type_violations": self.value_type_violations,
            "proposition_violations": self.proposition_violations,
            "object_violations": self.object_violations,
            "stuck_well_typed": self.stuck_well_typed,
            "fuel_exhausted": self.fuel_exhausted,
            "features": dict(sorted(self.features.items())),
        }

    def to_text(self) -> str:
        lines = [
            f"programs run:            {self.programs_run}",
            f"value type violations:   {len(self.value_type_violations)}",
            f"proposition violations:  {len(self.proposition_violations)}",
            f"object violations:       {len(self.object_violations)}",
            f"stuck well-typed:        {len(self.stuck_well_typed)}",
            f"fuel exhausted:          {self.fuel_exhausted}",
        ]
        if self.features:
            lines.append("forms: " + ", ".join(f"{k}={n}" for k, n in sorted(self.features.items())))
        for title, items in (("value type", self.value_type_violations),
                             ("proposition", self.proposition_violations),
                             ("object", self.object_violations),
                             ("stuck", self.stuck_well_typed)):
            for item in items[:10]:
                lines.append(f"{title} violation: {json.dumps(item, sort_keys=True)}")
        lines.append("result: " + ("OK" if self.ok else "VIOLATIONS FOUND"))
        return "\n".join(lines)


# ------------------------------------------------------------------ checks


def _clauses(model: Model, rho, r, v, where: str, report: SoundnessReport, program: str):
    """Lemma 2's three clauses for one (environment, result, value)."""
    from .sexpr import pretty
    try:
        if isinstance(r.obj, Obj) and not same_value(resolve(rho, r.obj), v):
            report.object_violations.append({"program": program, "at": where, "object": pretty(r.obj),
                                             "expected": pretty(v), "found": pretty(resolve(rho, r.obj))})
    except UnresolvableObject as err:
        report.object_violations.append({"program": program, "at": where, "object": pretty(r.obj),
                                         "expected": pretty(v), "found": str(err)})
    prop = r.neg if isinstance(v, FalseV) else r.pos
    try:
        ok = model.satisfies(rho, prop)
    except UnresolvableObject:
        ok = False
    if not ok:
        report.proposition_violations.append({"program": program, "at": where, "proposition": pretty(prop),
                                              "env": {k: pretty(x) for k, x in sorted(rho.items())}})
    if not model.has_type(v, r.type, rho):
        report.value_type_violations.append({"program": program, "at": where, "type": pretty(r.type),
                                             "value": pretty(v)})


def check_soundness(expr, fuel: int = DEFAULT_FUEL, deep: bool = False, outcome=None,
                    label: Optional[str] = None) -> SoundnessReport:
    """Check then evaluate a closed program and test the result against
    its type.  With ``deep`` every evaluated node is tested against the
    environment and result the checker recorded for it."""
    from .sexpr import pretty
    if outcome is None or (deep and outcome.session.records is None):
        outcome = check_program(expr, record=deep)
    session, prog = outcome.session, outcome.program
    model = Model(session)
    report = SoundnessReport(programs_run=1)
    text = label or pretty(expr)
    inst = session.instantiations

    def on_apply(node, fv, av):
        if isinstance(fv, PAccV):
            for var in inst.get(id(node), ()):
                model.record(var, av)

    on_node = None
    if deep:
        records = session.records

        def on_node(node, rho, v):
            for gamma, r in records.get(id(node), ()):
                unsatisfied = [p for p in gamma.elements if not _safe_sat(model, rho, p)]
                if unsatisfied:
                    report.proposition_violations.append({
                        "program": text, "at": pretty(node), "proposition": pretty(unsatisfied[0]),
                        "env": {k: pretty(x) for k, x in sorted(rho.items())}, "kind": "environment"})
                    continue
                _clauses(model, rho, r, v, pretty(node), report, text)

    out = evaluate({}, prog, fuel, on_node=on_node, on_apply=on_apply)
    if out.error is not None:
        if out.error.kind == "fuel":
            report.fuel_exhausted += 1
        else:
            report.stuck_well_typed.append({"program": text, "kind": out.error.kind, "detail": out.error.detail})
        return report
    _clauses(model, {}, outcome.result, out.value, "program", report, text)
    report.notes.extend(sorted(set(model.notes)))
    return report


def _safe_sat(model, rho, p) -> bool:
    try:
        return model.satisfies(rho, p)
    except UnresolvableObject:
        return False


SPOT_TYPES = (NAT, TRUE_T, FALSE_T, BOOL, TOP, PairT(TOP, TOP), PairT(NAT, TOP))


def lemma1_spot(expr, fuel: int = DEFAULT_FUEL) -> tuple[int, list]:
    """For every evaluated node, every variable in scope and a handful of
    atoms: whenever the checker's environment proves the atom, the runtime
    environment must satisfy it.  Returns (atoms proved, failures)."""
    from .sexpr import pretty
    outcome = check_program(expr, record=True)
    session = outcome.session
    model = Model(session)
    proved, failures = 0, []
    inst = session.instantiations

    def on_apply(node, fv, av):
        if isinstance(fv, PAccV):
            for var in inst.get(id(node), ()):
                model.record(var, av)

    def on_node(node, rho, v):
        nonlocal proved
        for gamma, _ in session.records.get(id(node), ()):
            if not all(_safe_sat(model, rho, p) for p in gamma.elements):
                continue
            for x in sorted(rho):
                for t in SPOT_TYPES:
                    for atom in (IsType(Obj(x), t), NotType(Obj(x), t)):
                        if proves(gamma, atom):
                            proved += 1
                            if not _safe_sat(model, rho, atom):
                                failures.append((pretty(node), pretty(atom), pretty(rho[x])))

    evaluate({}, outcome.program, fuel, on_node=on_node, on_apply=on_apply)
    return proved, failures


def run_fuzz(count: int, size: int, seed: int = 0, fuel: int = DEFAULT_FUEL, deep: bool = False,
             mutants: bool = True) -> SoundnessReport:
    from .generator import generate_checked
    from .sexpr import pretty
    report = SoundnessReport()
    for k in range(seed, seed + count):
        prog, outcome = generate_checked(k, size, mutants=mutants)
        part = check_soundness(prog, fuel, deep=deep, outcome=None if deep else outcome, label=f"seed {k}: {pretty(prog)}")
        for form in features(prog):
            part.features[form] = part.features.get(form, 0) + 1
        report.merge(part)
    report.notes = sorted(set(report.notes))
    return report


def features(expr) -> set:
    """Which expression forms a program uses (p-acc chains included)."""
    from .syntax import App, Cons, If, Let, LetProp, LetStruct, Proj, Var, walk
    out = set()
    pacc_names = set()
    for n in walk(expr):
        out.add(type(n).__name__)
        if isinstance(n, LetProp):
            pacc_names.add(n.acc)
    for n in walk(expr):
        if isinstance(n, App) and isinstance(n.fn, App) and isinstance(n.fn.fn, Var) and n.fn.fn.name in pacc_names:
            out.add("extraction")
    return out
