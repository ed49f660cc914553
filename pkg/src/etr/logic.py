"""Proposition environments and the proof relation.

A :class:`TypeEnv` is a persistent list of propositions plus declared
property labels.  Queries go through an algorithmic normal form: the
environment is split into disjunction-free branches (each a set of atomic
facts per variable, folded with ``update``), and a goal is provable when
every live branch proves it.  This is sound but not complete with respect
to the declarative rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .syntax import (
    BOTTOM,
    TOP,
    Alias,
    And,
    ArrowT,
    FF,
    FalseT,
    HasPropT,
    IsType,
    Nat,
    NotType,
    NullObj,
    Obj,
    Or,
    PairT,
    Prop,
    PropT,
    SelfT,
    StructT,
    TT,
    TVar,
    Top,
    TrueT,
    Type,
    UnionT,
    flatten_union,
    is_bottom,
    union_of,
)

MAX_BRANCHES = 32


class PathMismatch(Exception):
    pass


class TypeEnv:
    """Γ: propositions, declared property labels (with their value types) and
    the store of in-scope fresh type variables."""

    __slots__ = ("parent", "elems", "properties", "var_store", "_norm", "_bare")

    def __init__(self, elems: Iterable[Prop] = (), properties: Optional[Mapping[str, Type]] = None,
                 var_store: frozenset = frozenset(), parent: Optional["TypeEnv"] = None):
        self.parent = parent
        self.elems = tuple(elems)
        self.properties = dict(properties or {})
        self.var_store = var_store
        self._norm = None
        self._bare = None

    def extend(self, *props: Prop) -> "TypeEnv":
        props = tuple(p for p in props if not isinstance(p, TT))
        if not props:
            return self
        return TypeEnv(props, self.properties, self.var_store, self)

    def declare(self, label: str, value_type: Type) -> "TypeEnv":
        env = TypeEnv((), {**self.properties, label: value_type}, self.var_store, self)
        env._norm = self.normalized  # labels do not change the facts
        return env

    def with_vars(self, names: Iterable[str]) -> "TypeEnv":
        names = frozenset(names)
        if names <= self.var_store:
            return self
        env = TypeEnv((), self.properties, self.var_store | names, self)
        env._norm = self.normalized
        return env

    def bare(self) -> "TypeEnv":
        """The same declarations with no facts."""
        if self._bare is None:
            self._bare = TypeEnv((), self.properties, self.var_store)
            self._bare._bare = self._bare
        return self._bare

    @property
    def elements(self) -> tuple[Prop, ...]:
        chain = []
        e = self
        while e is not None:
            chain.append(e.elems)
            e = e.parent
        return tuple(p for elems in reversed(chain) for p in elems)

    @property
    def normalized(self) -> "Branches":
        if self._norm is None:
            pending = []
            e = self
            while e is not None and e._norm is None:
                pending.append(e)
                e = e.parent
            norm = e._norm if e is not None else Branches((Branch(),))
            for e in reversed(pending):
                norm = e._norm = norm.add_all(e.elems, e)
        return self._norm


# --------------------------------------------------------------- branches


@dataclass
class Branch:
    atoms: dict = field(default_factory=dict)    # root var -> tuple[(path, type, positive)]
    aliases: dict = field(default_factory=dict)  # var -> Obj
    _cache: dict = field(default_factory=dict)

    def copy(self, touched=()) -> "Branch":
        """A copy whose cached root types survive except for ``touched``
        roots and anything aliased (their types depend on other roots)."""
        stale = set(touched) | set(self.aliases)
        cache = {k: v for k, v in self._cache.items() if k not in stale}
        return Branch(dict(self.atoms), dict(self.aliases), cache)

    def canonical(self, o: Obj) -> Obj:
        seen = 0
        while o.var in self.aliases and seen < 64:
            t = self.aliases[o.var]
            o = Obj(t.var, o.path + t.path)
            seen += 1
        return o

    def root_type(self, x: str, env: TypeEnv) -> Type:
        if x in self._cache:
            return self._cache[x]
        self._cache[x] = TOP  # cycle guard
        atoms = sorted(self.atoms.get(x, ()), key=lambda a: (not a[2], len(a[0])))
        t: Type = TOP
        for path, s, pos in atoms:
            try:
                t = flatten_union(update(env, t, path, s, pos))
            except PathMismatch:
                pass
        # second pass: only accept refinements, so the fold cannot oscillate
        for path, s, pos in atoms:
            try:
                u = flatten_union(update(env, t, path, s, pos))
            except PathMismatch:
                continue
            if u != t and _subtype(env, u, t):
                t = u
        if x in self.aliases:
            other = self.type_of(self.aliases[x], env)
            t = flatten_union(restrict(env, t, other)) if not _subtype(env, t, other) else t
        self._cache[x] = t
        return t

    def type_of(self, o: Obj, env: TypeEnv) -> Type:
        t = self.root_type(o.var, env)
        for f in reversed(o.path):
            t = project(t, f)
        return t

    def atoms_on(self, o: Obj):
        out = []
        for obj in {o, self.canonical(o)}:
            for path, s, pos in self.atoms.get(obj.var, ()):
                if path == obj.path:
                    out.append((s, pos))
        return out

    def add_atom(self, o: Obj, s: Type, positive: bool, env: TypeEnv) -> Optional["Branch"]:
        targets = {o, self.canonical(o)}
        touched = {t.var for t in targets}
        b = self.copy(touched)
        for t in targets:
            b.atoms[t.var] = b.atoms.get(t.var, ()) + ((t.path, s, positive),)
        if b._live(env, touched):
            return b
        return None

    def add_alias(self, a: Obj, o: Obj, env: TypeEnv) -> Optional["Branch"]:
        if a.path and not o.path:
            a, o = o, a
        if a.path:
            return self  # path-to-path aliases carry no usable fact here
        o = self.canonical(o)
        if o.var == a.var:
            return self
        touched = {a.var, o.var}
        b = self.copy(touched)
        b.aliases[a.var] = o
        for path, s, pos in self.atoms.get(a.var, ()):
            b.atoms[o.var] = b.atoms.get(o.var, ()) + ((path + o.path, s, pos),)
        if b._live(env, touched):
            return b
        return None

    def _live(self, env: TypeEnv, touched) -> bool:
        return not any(is_bottom(self.root_type(x, env)) for x in set(touched) | set(self.aliases))

    # -- proofs

    def proves(self, goal: Prop, env: TypeEnv) -> bool:
        match goal:
            case TT():
                return True
            case FF():
                return False
            case IsType(o, t):
                have = self.type_of(o, env)
                if is_bottom(have) or _subtype(env, have, t):
                    return True
                return any(pos and _subtype(env, s, t) for s, pos in self.atoms_on(o))
            case NotType(o, t):
                if not overlap(env, self.type_of(o, env), t):
                    return True
                for s, pos in self.atoms_on(o):
                    if pos and not overlap(env, s, t):
                        return True
                    if not pos and _subtype(env, t, s):
                        return True
                return False
            case And(a, b):
                return self.proves(a, env) and self.proves(b, env)
            case Or(a, b):
                return self.proves(a, env) or self.proves(b, env)
            case Alias(a, b):
                return a == b or self.canonical(a) == self.canonical(b)
        raise TypeError(goal)


def _add(branch: Branch, p: Prop, env: TypeEnv) -> list[Branch]:
    match p:
        case TT():
            return [branch]
        case FF():
            return []
        case IsType(o, t):
            b = branch.add_atom(o, t, True, env)
            return [b] if b is not None else []
        case NotType(o, t):
            b = branch.add_atom(o, t, False, env)
            return [b] if b is not None else []
        case And(a, c):
            return [b2 for b1 in _add(branch, a, env) for b2 in _add(b1, c, env)]
        case Or(a, c):
            return _add(branch, a, env) + _add(branch, c, env)
        case Alias(a, o):
            b = branch.add_alias(a, o, env)
            return [b] if b is not None else []
    raise TypeError(p)


@dataclass(frozen=True)
class Branches:
    branches: tuple[Branch, ...]

    def add_all(self, props: Iterable[Prop], env: TypeEnv) -> "Branches":
        bs = list(self.branches)
        for p in props:
            bs = [b2 for b in bs for b2 in _add(b, p, env)]
            if len(bs) > MAX_BRANCHES:
                bs = [merge_branches(bs, env)]
        return Branches(tuple(bs))

    @property
    def absurd(self) -> bool:
        return not self.branches


def merge_branches(bs: list[Branch], env: TypeEnv) -> Branch:
    """Pointwise join: each variable gets the union of its per-branch types.
    The result is implied by every input branch."""
    out = Branch()
    roots = set.intersection(*(set(b.atoms) | set(b.aliases) for b in bs))
    for x in roots:
        t = union_of(*(b.root_type(x, env) for b in bs))
        out.atoms[x] = (((), t, True),)
    common = set.intersection(*(set(b.aliases.items()) for b in bs))
    out.aliases = dict(common)
    return out


# ----------------------------------------------------------- public API


@dataclass
class NormalizedEnv:
    facts: dict           # Obj -> positive type
    negative: dict        # Obj -> list of types known not to hold
    aliases: dict         # var -> Obj
    absurd: bool


def normalize(env: TypeEnv) -> NormalizedEnv:
    bs = env.normalized.branches
    if not bs:
        return NormalizedEnv({}, {}, {}, True)
    merged = merge_branches(list(bs), env) if len(bs) > 1 else bs[0]
    facts = {Obj(x): merged.root_type(x, env) for x in set(merged.atoms) | set(merged.aliases)}
    negative: dict = {}
    if len(bs) == 1:
        for x, atoms in merged.atoms.items():
            for path, s, pos in atoms:
                if not pos:
                    negative.setdefault(Obj(x, path), []).append(s)
    return NormalizedEnv(facts, negative, dict(merged.aliases), False)


def embed(n: NormalizedEnv, base: Optional[TypeEnv] = None) -> TypeEnv:
    props: list[Prop] = []
    if n.absurd:
        props.append(FF())
    for o, t in n.facts.items():
        props.append(IsType(o, t))
    for o, ts in n.negative.items():
        props.extend(NotType(o, t) for t in ts)
    for x, o in n.aliases.items():
        props.append(Alias(Obj(x), o))
    return TypeEnv(props, base.properties if base else None)


def proves(env: TypeEnv, goal: Prop) -> bool:
    return all(b.proves(goal, env) for b in env.normalized.branches)


def lookup(env: TypeEnv, o: Obj) -> Type:
    """Most precise type the environment gives an object (⊥ when absurd)."""
    bs = env.normalized.branches
    return union_of(*(b.type_of(o, env) for b in bs)) if bs else BOTTOM


def bound(env: TypeEnv, x: str) -> bool:
    return any(x in b.atoms or x in b.aliases for b in env.normalized.branches) or env.normalized.absurd


# -------------------------------------------------------- metafunctions


def project(t: Type, which: str) -> Type:
    t = flatten_union(t)
    match t:
        case PairT(a, b):
            return a if which == "fst" else b
        case UnionT(ms):
            return union_of(*(project(m, which) for m in ms)) if ms else BOTTOM
    return TOP


def update(env: TypeEnv, t: Type, path: tuple[str, ...], s: Type, positive: bool) -> Type:
    if path:
        head, rest = path[-1], path[:-1]
        match t:
            case PairT(a, b):
                if head == "fst":
                    return PairT(update(env, a, rest, s, positive), b)
                return PairT(a, update(env, b, rest, s, positive))
            case UnionT(ms):
                out = []
                for m in ms:
                    try:
                        out.append(update(env, m, path, s, positive))
                    except PathMismatch:
                        out.append(m)
                return UnionT(tuple(out))
            case Top():
                return t
        raise PathMismatch(f"cannot follow {head} into {t!r}")
    return restrict(env, t, s) if positive else remove(env, t, s)


def restrict(env: TypeEnv, t: Type, s: Type) -> Type:
    if not overlap(env, t, s):
        return BOTTOM
    if isinstance(t, UnionT):
        return UnionT(tuple(restrict(env, m, s) for m in t.members))
    if _subtype(env, t, s):
        return t
    return s


def remove(env: TypeEnv, t: Type, s: Type) -> Type:
    if _subtype(env, t, s):
        return BOTTOM
    if isinstance(t, UnionT):
        return UnionT(tuple(remove(env, m, s) for m in t.members))
    return t


def overlap(env: Optional[TypeEnv], t: Type, s: Type) -> bool:
    """False only when no value can inhabit both types."""
    t, s = flatten_union(t), flatten_union(s)
    if is_bottom(t) or is_bottom(s):
        return False
    if isinstance(t, UnionT):
        return any(overlap(env, m, s) for m in t.members)
    if isinstance(s, UnionT):
        return any(overlap(env, t, m) for m in s.members)
    if isinstance(t, (Top, TVar, SelfT)) or isinstance(s, (Top, TVar, SelfT)):
        return True
    match t, s:
        case (Nat(), Nat()) | (TrueT(), TrueT()) | (FalseT(), FalseT()):
            return True
        case PairT(a1, b1), PairT(a2, b2):
            return overlap(env, a1, a2) and overlap(env, b1, b2)
        case StructT(stamp=s1), StructT(stamp=s2):
            return s1 == s2
        case StructT(props=ps), HasPropT(l):
            return l in ps
        case HasPropT(l), StructT(props=ps):
            return l in ps
        case HasPropT(), HasPropT():
            return True
        case PropT(), PropT():
            return True
        case ArrowT(), ArrowT():
            return True
    return False


def _subtype(env, a, b) -> bool:
    """Type comparison inside the metafunctions sees declared properties but
    not facts; arrow results would otherwise re-normalize without end."""
    from .subtyping import subtype
    return subtype(env.bare() if env is not None else None, a, b)
