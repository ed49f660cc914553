"""Surface syntax: a small s-expression reader, the program/type parser and
the printer.  ``[`` ``]`` are accepted as synonyms for parentheses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .syntax import (
    BOOL,
    FALSE_T,
    NAT,
    NULL,
    PRIMS,
    SELF,
    TOP,
    TRUE_T,
    Alias,
    And,
    App,
    ArrowT,
    BoolLit,
    ClosureV,
    Cons,
    FF,
    FalseT,
    FalseV,
    HasPropT,
    If,
    IsType,
    Lam,
    Let,
    LetProp,
    LetStruct,
    Nat,
    NatLit,
    NatV,
    NotType,
    NullObj,
    Obj,
    Or,
    PairT,
    PairV,
    Prim,
    PrimV,
    Proj,
    PropRef,
    PropT,
    SelfT,
    StructRef,
    StructT,
    StructV,
    TT,
    TVar,
    Top,
    TrueT,
    TrueV,
    TypeResult,
    UnionT,
    Var,
    DescV,
    CtorV,
    PredV,
    AccV,
    PPredV,
    PAccV,
    arrow,
)

KEYWORDS = {
    "lambda", "if", "let", "let-struct", "let-struct-property", "cons", "fst", "snd",
    "true", "false", ":", "_", *PRIMS,
}
TYPE_HEADS = {"Pair", "U", "Prop", "Has-Prop", "->", "Exists"}


class ParseError(SyntaxError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ArityError(ParseError):
    pass


# ----------------------------------------------------------------- reader


@dataclass
class Atom:
    text: str
    line: int
    col: int


@dataclass
class SList:
    items: list
    line: int
    col: int


SExp = Union[Atom, SList]

_CLOSE = {"(": ")", "[": "]"}


def read_all(text: str) -> list[SExp]:
    out: list[SExp] = []
    stack: list[tuple[SList, str]] = []
    i, line, col, n = 0, 1, 1, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in "([":
            stack.append((SList([], line, col), _CLOSE[c]))
            i, col = i + 1, col + 1
            continue
        if c in ")]":
            if not stack:
                raise ParseError(f"unexpected '{c}'", line, col)
            lst, want = stack.pop()
            if c != want:
                raise ParseError(f"expected '{want}' but found '{c}'", line, col)
            (stack[-1][0].items if stack else out).append(lst)
            i, col = i + 1, col + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "()[];":
            j += 1
        tok = text[i:j]
        (stack[-1][0].items if stack else out).append(Atom(tok, line, col))
        col += j - i
        i = j
    if stack:
        lst, want = stack[-1]
        raise ParseError(f"unclosed '(' (expected '{want}')", lst.line, lst.col)
    return out


# ----------------------------------------------------------------- parser


def _err(s: SExp, msg: str, cls=ParseError):
    raise cls(msg, s.line, s.col)


def _ident(s: SExp, what: str = "identifier") -> str:
    if not isinstance(s, Atom):
        _err(s, f"expected {what}")
    t = s.text
    if t.isdigit() or t in KEYWORDS:
        _err(s, f"expected {what}, found '{t}'")
    if "%" in t:
        _err(s, f"'%' is reserved and cannot appear in identifiers: '{t}'")
    return t


def _is(s: SExp, text: str) -> bool:
    return isinstance(s, Atom) and s.text == text


def _list(s: SExp, n: int | None = None, what: str = "form") -> list:
    if not isinstance(s, SList):
        _err(s, f"expected a parenthesized {what}")
    if n is not None and len(s.items) != n:
        _err(s, f"{what} expects {n} parts, found {len(s.items)}", ArityError)
    return s.items


def _loc(s: SExp):
    return (s.line, s.col)


def parse_program(source: str):
    forms = read_all(source)
    if not forms:
        raise ParseError("empty program", 1, 1)
    if len(forms) > 1:
        _err(forms[1], "a program is a single expression")
    return parse_expr(forms[0])


def parse_expr_text(source: str):
    return parse_program(source)


def parse_expr(s: SExp):
    if isinstance(s, Atom):
        t = s.text
        if t.isdigit():
            return NatLit(int(t), _loc(s))
        if t == "true":
            return BoolLit(True, _loc(s))
        if t == "false":
            return BoolLit(False, _loc(s))
        if t in PRIMS:
            return Prim(t, _loc(s))
        return Var(_ident(s, "expression"), _loc(s))
    items = s.items
    if not items:
        _err(s, "empty application")
    head = items[0]
    if isinstance(head, Atom):
        h = head.text
        if h == "lambda":
            _list(s, 3, "lambda")
            x, ann = _binder(items[1])
            return Lam(x, ann, parse_expr(items[2]), _loc(s))
        if h == "if":
            _list(s, 4, "if")
            return If(parse_expr(items[1]), parse_expr(items[2]), parse_expr(items[3]), _loc(s))
        if h == "let":
            _list(s, 3, "let")
            b = _list(items[1], 2, "let binding")
            return Let(_ident(b[0]), parse_expr(b[1]), parse_expr(items[2]), _loc(s))
        if h == "cons":
            _list(s, 3, "cons")
            return Cons(parse_expr(items[1]), parse_expr(items[2]), _loc(s))
        if h in ("fst", "snd"):
            _list(s, 2, h)
            return Proj(h, parse_expr(items[1]), _loc(s))
        if h == "let-struct":
            return _let_struct(s)
        if h == "let-struct-property":
            return _let_prop(s)
    _list(s, 2, "application")
    return App(parse_expr(items[0]), parse_expr(items[1]), _loc(s))


def _binder(s: SExp):
    b = _list(s, 3, "annotated binder (x : T)")
    if not _is(b[1], ":"):
        _err(b[1], "expected ':'")
    return _ident(b[0]), parse_type(b[2])


def _names3(s: SExp):
    ns = _list(s, 3, "name triple")
    return tuple(_ident(n) for n in ns)


def _let_struct(s: SList):
    items = _list(s, 3, "let-struct")
    decl = _list(items[1], 2, "let-struct declaration")
    ctor, pred, acc = _names3(decl[0])
    spec = _list(decl[1], 3, "struct specification (name type (props ...))")
    name = _ident(spec[0], "struct name")
    ftype = parse_type(spec[1])
    props = []
    for p in _list(spec[2], None, "property list"):
        pb = _list(p, 2, "property binding")
        props.append((_ident(pb[0], "property descriptor"), parse_expr(pb[1])))
    if len({p for p, _ in props}) != len(props):
        _err(spec[2], "duplicate property in let-struct")
    return LetStruct(ctor, pred, acc, name, ftype, tuple(props), parse_expr(items[2]), _loc(s))


def _let_prop(s: SList):
    items = _list(s, 3, "let-struct-property")
    decl = _list(items[1], 2, "let-struct-property declaration")
    desc, pred, acc = _names3(decl[0])
    spec = _list(decl[1], 2, "property specification (label type)")
    return LetProp(desc, pred, acc, _ident(spec[0], "property label"), parse_type(spec[1]),
                   parse_expr(items[2]), _loc(s))


def parse_type_text(source: str):
    forms = read_all(source)
    if len(forms) != 1:
        raise ParseError("expected exactly one type", 1, 1)
    return parse_type(forms[0])


def parse_type(s: SExp):
    if isinstance(s, Atom):
        t = s.text
        simple = {"Top": TOP, "Nat": NAT, "True": TRUE_T, "False": FALSE_T, "Bool": BOOL, "Self": SELF}
        if t in simple:
            return simple[t]
        return TVar(_ident(s, "type"))
    items = _list(s)
    if not items or not isinstance(items[0], Atom):
        _err(s, "malformed type")
    h = items[0].text
    if h == "Pair":
        _list(s, 3, "Pair")
        return PairT(parse_type(items[1]), parse_type(items[2]))
    if h == "U":
        return UnionT(tuple(parse_type(m) for m in items[1:]))
    if h == "Prop":
        _list(s, 2, "Prop")
        return PropT(parse_type(items[1]))
    if h == "Has-Prop":
        _list(s, 2, "Has-Prop")
        return HasPropT(_ident(items[1], "property label"))
    if h == "->":
        _list(s, 3, "->")
        x, dom = _binder(items[1])
        return ArrowT((), x, dom, parse_result(items[2]))
    if h == "Exists":
        _list(s, 3, "Exists")
        qs = tuple(_ident(q, "type variable") for q in _list(items[1], None, "quantifier list"))
        if not qs:
            _err(items[1], "Exists needs at least one quantifier", ArityError)
        body = parse_type(items[2])
        if not isinstance(body, ArrowT) or body.quants:
            _err(items[2], "Exists must wrap a plain arrow type")
        return arrow(body.param, body.dom, body.res, qs)
    _err(s, f"unknown type constructor '{h}'")


def parse_result(s: SExp) -> TypeResult:
    if isinstance(s, SList) and len(s.items) == 4 and not (
        isinstance(s.items[0], Atom) and s.items[0].text in TYPE_HEADS
    ):
        t, p, n, o = s.items
        return TypeResult(parse_type(t), parse_prop(p), parse_prop(n), parse_obj(o))
    return TypeResult(parse_type(s))


def parse_prop(s: SExp):
    if isinstance(s, Atom):
        if s.text == "TT":
            return TT()
        if s.text == "FF":
            return FF()
        _err(s, "expected a proposition")
    items = _list(s)
    h = items[0].text if items and isinstance(items[0], Atom) else None
    if h in ("in", "not-in"):
        _list(s, 3, h)
        o = parse_obj(items[1])
        if isinstance(o, NullObj):
            _err(items[1], "propositions need a non-null object")
        t = parse_type(items[2])
        return IsType(o, t) if h == "in" else NotType(o, t)
    if h in ("and", "or"):
        _list(s, 3, h)
        a, b = parse_prop(items[1]), parse_prop(items[2])
        return And(a, b) if h == "and" else Or(a, b)
    if h == "alias":
        _list(s, 3, h)
        a, b = parse_obj(items[1]), parse_obj(items[2])
        if isinstance(a, NullObj) or isinstance(b, NullObj):
            _err(s, "alias needs non-null objects")
        return Alias(a, b)
    _err(s, "expected a proposition")


def parse_obj(s: SExp):
    if isinstance(s, Atom):
        if s.text == "_":
            return NULL
        return Obj(_ident(s, "object"))
    items = _list(s, 3, "path object")
    if not _is(items[0], "path"):
        _err(s, "expected (path (fields ...) x)")
    fields = []
    for f in _list(items[1], None, "field list"):
        if not (isinstance(f, Atom) and f.text in ("fst", "snd")):
            _err(f, "expected fst or snd")
        fields.append(f.text)
    return Obj(_ident(items[2]), tuple(fields))


# ---------------------------------------------------------------- printer


def pretty(node) -> str:
    """Render an expression, type, proposition, object, result or value."""
    if isinstance(node, TypeResult):
        return _result(node)
    if isinstance(node, (NullObj, Obj)):
        return _obj(node)
    if isinstance(node, (TT, FF, IsType, NotType, And, Or, Alias)):
        return _prop(node)
    if isinstance(node, (NatV, TrueV, FalseV, PrimV, PairV, ClosureV, StructV, DescV,
                         CtorV, PredV, AccV, PPredV, PAccV)):
        return _value(node)
    if isinstance(node, (Top, Nat, TrueT, FalseT, PairT, UnionT, StructT, PropT, HasPropT,
                         SelfT, TVar, ArrowT)):
        return _type(node)
    return _expr(node)


def _type(t) -> str:
    match t:
        case Top():
            return "Top"
        case Nat():
            return "Nat"
        case TrueT():
            return "True"
        case FalseT():
            return "False"
        case SelfT():
            return "Self"
        case TVar(n):
            return n
        case PairT(a, b):
            return f"(Pair {_type(a)} {_type(b)})"
        case UnionT(ms):
            if t == BOOL:
                return "Bool"
            return "(U" + "".join(" " + _type(m) for m in ms) + ")"
        case StructT(n, _, _, _):
            return n
        case PropT(v):
            return f"(Prop {_type(v)})"
        case HasPropT(l):
            return f"(Has-Prop {l})"
        case ArrowT(qs, x, d, r):
            body = f"(-> ({x} : {_type(d)}) {_result(r)})"
            if qs:
                return f"(Exists ({' '.join(qs)}) {body})"
            return body
    raise TypeError(f"not a type: {t!r}")


def _result(r: TypeResult) -> str:
    if isinstance(r.pos, TT) and isinstance(r.neg, TT) and isinstance(r.obj, NullObj):
        return _type(r.type)
    return f"({_type(r.type)} {_prop(r.pos)} {_prop(r.neg)} {_obj(r.obj)})"


def _obj(o) -> str:
    if isinstance(o, NullObj):
        return "_"
    if not o.path:
        return o.var
    return f"(path ({' '.join(o.path)}) {o.var})"


def _prop(p) -> str:
    match p:
        case TT():
            return "TT"
        case FF():
            return "FF"
        case IsType(o, t):
            return f"(in {_obj(o)} {_type(t)})"
        case NotType(o, t):
            return f"(not-in {_obj(o)} {_type(t)})"
        case And(a, b):
            return f"(and {_prop(a)} {_prop(b)})"
        case Or(a, b):
            return f"(or {_prop(a)} {_prop(b)})"
        case Alias(a, b):
            return f"(alias {_obj(a)} {_obj(b)})"
    raise TypeError(f"not a proposition: {p!r}")


def _expr(e) -> str:
    match e:
        case Var(n):
            return n
        case StructRef(n):
            return n
        case PropRef(l):
            return l
        case NatLit(v):
            return str(v)
        case BoolLit(b):
            return "true" if b else "false"
        case Prim(op):
            return op
        case Lam(x, t, b):
            return f"(lambda ({x} : {_type(t)}) {_expr(b)})"
        case App(f, a):
            return f"({_expr(f)} {_expr(a)})"
        case If(t, a, b):
            return f"(if {_expr(t)} {_expr(a)} {_expr(b)})"
        case Let(x, r, b):
            return f"(let ({x} {_expr(r)}) {_expr(b)})"
        case LetStruct(c, p, a, n, ft, ps, b):
            props = " ".join(f"({d} {_expr(pe)})" for d, pe in ps)
            return f"(let-struct (({c} {p} {a}) ({n} {_type(ft)} ({props}))) {_expr(b)})"
        case LetProp(d, p, a, l, t, b):
            return f"(let-struct-property (({d} {p} {a}) ({l} {_type(t)})) {_expr(b)})"
        case Cons(a, b):
            return f"(cons {_expr(a)} {_expr(b)})"
        case Proj(w, t):
            return f"({w} {_expr(t)})"
    raise TypeError(f"not an expression: {e!r}")


def _value(v) -> str:
    match v:
        case NatV(n):
            return str(n)
        case TrueV():
            return "true"
        case FalseV():
            return "false"
        case PrimV(op):
            return op
        case PairV(a, b):
            return f"(cons {_value(a)} {_value(b)})"
        case ClosureV(_, x, t, b):
            return f"#<closure (lambda ({x} : {_type(t)}) {_expr(b)})>"
        case StructV(n, _, f, _, _):
            return f"#<{n} {_value(f)}>"
        case DescV(l, _):
            return f"#<property-descriptor {l}>"
        case CtorV(st, _):
            return f"#<constructor {st.name}>"
        case PredV(st):
            return f"#<predicate {st.name}>"
        case AccV(st):
            return f"#<accessor {st.name}>"
        case PPredV(l):
            return f"#<property-predicate {l}>"
        case PAccV(l, _):
            return f"#<property-accessor {l}>"
    raise TypeError(f"not a value: {v!r}")
