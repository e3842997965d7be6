"""Concrete syntax: lexer, recursive-descent parser and printer.

Grammar (prefixes bind tighter than ``|``, parentheses group)::

    types   unit | ch<T> | abs<T> | rec Z. T | Z
    values  () | name | variable | \\x:T -> P | call k
    procs   v(w) | c?(x:T).P | c!<v>.P | if v = w then P else Q
            | nu a:T.(P) | P | Q | !P | 0 | res k <= v

A file may start with declarations ``chan a : T`` and ``trigger k : T``.
Comments run from ``--`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Set

from .syntax import (
    Abs,
    App,
    Chan,
    Input,
    Lambda,
    Match,
    Name,
    New,
    Nil,
    NIL,
    Output,
    Par,
    Rec,
    Repl,
    Resource,
    Term,
    TriggerCall,
    TypeExpr,
    TypeVar,
    Unit,
    UnitVal,
    UNIT,
    UNIT_VAL,
    Var,
)

KEYWORDS = {"unit", "ch", "abs", "rec", "call", "res", "nu", "if", "then", "else", "chan", "trigger"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<zero>0)
  | (?P<sym><=|->|[()<>!?.:|\\=,;])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = sorted(set(expected))
        detail = f"{line}:{column}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "ident" and s in KEYWORDS:
                out.append(Token("kw", s, line, col))
            elif kind in ("ident", "zero", "sym"):
                out.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


@dataclass
class Document:
    """A parsed file: declared channel types, declared trigger types and the term."""

    delta: Dict[str, TypeExpr] = field(default_factory=dict)
    theta: Dict[str, TypeExpr] = field(default_factory=dict)
    term: Term = NIL


class _Parser:
    def __init__(self, text: str, triggers: Iterable[str] = ()):
        self.toks = tokenize(text)
        self.i = 0
        self.triggers: Set[str] = set(triggers)

    # token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, n: int = 1) -> Token:
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("sym", "kw", "zero")

    def fail(self, message: str, expected: Iterable[str] = ()) -> ParseError:
        t = self.tok
        found = t.text or "end of input"
        return ParseError(f"{message}, found {found!r}", t.line, t.column, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail(f"expected {text!r}", [text])
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            raise self.fail(f"expected {what}", [what])
        s = self.tok.text
        self.i += 1
        return s

    # document ------------------------------------------------------------

    def document(self) -> Document:
        doc = Document()
        while self.at("chan") or self.at("trigger"):
            kw = self.tok.text
            self.i += 1
            ident = self.ident("identifier")
            self.expect(":")
            ty = self.type_expr()
            if self.at(";"):
                self.i += 1
            if kw == "chan":
                doc.delta[ident] = ty
            else:
                doc.theta[ident] = ty
                self.triggers.add(ident)
        doc.term = self.process(frozenset())
        if self.tok.kind != "eof":
            raise self.fail("trailing input", ["|", "end of input"])
        return doc

    # types ---------------------------------------------------------------

    def type_expr(self) -> TypeExpr:
        t = self.tok
        if self.at("unit"):
            self.i += 1
            return UNIT
        if self.at("ch") or self.at("abs"):
            self.i += 1
            self.expect("<")
            inner = self.type_expr()
            self.expect(">")
            return Chan(inner) if t.text == "ch" else Abs(inner)
        if self.at("rec"):
            self.i += 1
            z = self.ident("type variable")
            self.expect(".")
            return Rec(z, self.type_expr())
        if t.kind == "ident":
            self.i += 1
            return TypeVar(t.text)
        raise self.fail("expected a type", ["unit", "ch", "abs", "rec", "type variable"])

    # values --------------------------------------------------------------

    def value(self, scope: frozenset) -> Term:
        t = self.tok
        if self.at("("):
            if self.peek().text == ")":
                self.i += 2
                return UNIT_VAL
            self.i += 1
            v = self.value(scope)
            self.expect(")")
            return v
        if self.at("\\"):
            return self.lambda_(scope)
        if self.at("call"):
            self.i += 1
            return TriggerCall(self.trigger_ident())
        if t.kind == "ident":
            self.i += 1
            return Var(t.text) if t.text in scope else Name(t.text)
        raise self.fail("expected a value", ["()", "identifier", "\\", "call"])

    def lambda_(self, scope: frozenset) -> Term:
        self.expect("\\")
        x = self.ident("variable")
        self.expect(":")
        ty = self.type_expr()
        self.expect("->")
        body = self.prefix(scope | {x})
        return Lambda(x, ty, body)

    def trigger_ident(self) -> str:
        t = self.tok
        k = self.ident("trigger identifier")
        if k not in self.triggers:
            raise ParseError(f"undeclared trigger {k!r}", t.line, t.column, ["declared trigger"])
        return k

    # processes -----------------------------------------------------------

    def process(self, scope: frozenset) -> Term:
        left = self.prefix(scope)
        while self.at("|"):
            self.i += 1
            left = Par(left, self.prefix(scope))
        return left

    def prefix(self, scope: frozenset) -> Term:
        t = self.tok
        if t.kind == "zero":
            self.i += 1
            return NIL
        if self.at("!"):
            self.i += 1
            return Repl(self.prefix(scope))
        if self.at("nu"):
            self.i += 1
            a = self.ident("channel name")
            self.expect(":")
            ty = self.type_expr()
            self.expect(".")
            self.expect("(")
            body = self.process(scope - {a})
            self.expect(")")
            return New(a, ty, body)
        if self.at("if"):
            self.i += 1
            left = self.value(scope)
            self.expect("=")
            right = self.value(scope)
            self.expect("then")
            then = self.prefix(scope)
            self.expect("else")
            orelse = self.prefix(scope)
            return Match(left, right, then, orelse)
        if self.at("res"):
            self.i += 1
            k = self.trigger_ident()
            self.expect("<=")
            return Resource(k, self.value(scope))
        if self.at("("):
            nxt = self.peek()
            value_group = (
                nxt.text in ("\\", ")")
                or (nxt.kind == "ident" and self.peek(2).text == ")")
                or (nxt.text == "call" and self.peek(3).text == ")")
            )
            if value_group:
                fun = self.value(scope)
                return self.application(fun, scope)
            self.i += 1
            p = self.process(scope)
            self.expect(")")
            return p
        if self.at("call"):
            fun = self.value(scope)
            return self.application(fun, scope)
        if t.kind == "ident":
            subj = self.value(scope)
            if self.at("?"):
                self.i += 1
                self.expect("(")
                x = self.ident("variable")
                self.expect(":")
                ty = self.type_expr()
                self.expect(")")
                self.expect(".")
                body = self.prefix(scope | {x})
                return Input(subj, x, ty, body)
            if self.at("!"):
                self.i += 1
                self.expect("<")
                payload = self.value(scope)
                self.expect(">")
                self.expect(".")
                return Output(subj, payload, self.prefix(scope))
            return self.application(subj, scope)
        raise self.fail("expected a process", ["0", "!", "nu", "if", "res", "(", "identifier", "call"])

    def application(self, fun: Term, scope: frozenset) -> Term:
        if not self.at("("):
            raise self.fail("expected an argument", ["("])
        self.i += 1
        arg = self.value(scope)
        self.expect(")")
        return App(fun, arg)


def parse(text: str, triggers: Optional[Iterable[str]] = None) -> Term:
    """Parse a configuration.

    ``triggers`` pre-declares trigger identifiers; otherwise only those
    declared in the text's header may follow ``call``/``res``.
    """
    return _Parser(text, triggers or ()).document().term


def parse_document(text: str, triggers: Optional[Iterable[str]] = None) -> Document:
    return _Parser(text, triggers or ()).document()


def parse_type(text: str) -> TypeExpr:
    p = _Parser(text)
    ty = p.type_expr()
    if p.tok.kind != "eof":
        raise p.fail("trailing input", ["end of input"])
    return ty


# --------------------------------------------------------------------------
# Printing


def show_type(t: TypeExpr) -> str:
    if isinstance(t, Unit):
        return "unit"
    if isinstance(t, Chan):
        return f"ch<{show_type(t.payload)}>"
    if isinstance(t, Abs):
        return f"abs<{show_type(t.arg)}>"
    if isinstance(t, TypeVar):
        return t.name
    if isinstance(t, Rec):
        return f"rec {t.binder}. {show_type(t.body)}"
    raise TypeError(f"not a type: {t!r}")


class _Printer:
    def __init__(self, names: Optional[Mapping[str, str]] = None):
        self.names = names or {}

    def value(self, v: Term, wrap_lambda: bool = False) -> str:
        if isinstance(v, UnitVal):
            return "()"
        if isinstance(v, Name):
            return self.names.get(v.id, v.id)
        if isinstance(v, Var):
            return v.id
        if isinstance(v, TriggerCall):
            return f"call {v.k}"
        if isinstance(v, Lambda):
            s = f"\\{v.param}:{show_type(v.param_type)} -> {self.proc(v.body, True)}"
            return f"({s})" if wrap_lambda else s
        raise TypeError(f"not a value: {v!r}")

    def proc(self, p: Term, tight: bool = False) -> str:
        if isinstance(p, Par):
            right = self.proc(p.right, True)
            s = f"{self.proc(p.left)} | {right}"
            return f"({s})" if tight else s
        if isinstance(p, Nil):
            return "0"
        if isinstance(p, Repl):
            return f"!{self.proc(p.body, True)}"
        if isinstance(p, New):
            a = self.names.get(p.name, p.name)
            return f"nu {a}:{show_type(p.name_type)}.({self.proc(p.body)})"
        if isinstance(p, Match):
            return (
                f"if {self.value(p.left, True)} = {self.value(p.right, True)} "
                f"then {self.proc(p.then, True)} else {self.proc(p.orelse, True)}"
            )
        if isinstance(p, Input):
            return (
                f"{self.value(p.subject, True)}?({p.param}:{show_type(p.param_type)})"
                f".{self.proc(p.body, True)}"
            )
        if isinstance(p, Output):
            return f"{self.value(p.subject, True)}!<{self.value(p.payload)}>.{self.proc(p.cont, True)}"
        if isinstance(p, Resource):
            return f"res {p.k} <= {self.value(p.value)}"
        if isinstance(p, App):
            fun = self.value(p.fun, True)
            sep = " " if isinstance(p.fun, TriggerCall) else ""
            return f"{fun}{sep}({self.value(p.arg)})"
        # bare value in process position; only reachable for invalid terms
        return self.value(p, True)


def show(t: Term, names: Optional[Mapping[str, str]] = None) -> str:
    """Render a term in the surface grammar."""
    printer = _Printer(names)
    if isinstance(t, (UnitVal, Name, Var, TriggerCall, Lambda)):
        return printer.value(t)
    return printer.proc(t)


def show_document(delta: Mapping[str, TypeExpr], theta: Mapping[str, TypeExpr], term: Term) -> str:
    lines = [f"chan {a} : {show_type(t)}" for a, t in sorted(delta.items())]
    lines += [f"trigger {k} : {show_type(t)}" for k, t in sorted(theta.items())]
    lines.append(show(term))
    return "\n".join(lines)
