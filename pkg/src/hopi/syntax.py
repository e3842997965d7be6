"""Abstract syntax for HOpi types, values, processes and augmented configurations.

Channel names, variables and trigger identifiers live in three disjoint
namespaces; they are all plain strings here and the constructor that wraps
them (``Name``, ``Var``, ``TriggerCall``/``Resource``) says which namespace
an identifier belongs to.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Mapping, Set, Tuple


# --------------------------------------------------------------------------
# Types


class TypeExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Unit(TypeExpr):
    pass


@dataclass(frozen=True)
class Chan(TypeExpr):
    payload: TypeExpr


@dataclass(frozen=True)
class Abs(TypeExpr):
    arg: TypeExpr


@dataclass(frozen=True)
class TypeVar(TypeExpr):
    name: str


@dataclass(frozen=True)
class Rec(TypeExpr):
    binder: str
    body: TypeExpr


UNIT = Unit()


def free_type_vars(t: TypeExpr) -> Set[str]:
    if isinstance(t, TypeVar):
        return {t.name}
    if isinstance(t, (Chan,)):
        return free_type_vars(t.payload)
    if isinstance(t, Abs):
        return free_type_vars(t.arg)
    if isinstance(t, Rec):
        return free_type_vars(t.body) - {t.binder}
    return set()


def subst_type(t: TypeExpr, z: str, u: TypeExpr) -> TypeExpr:
    """Capture-avoiding ``t[u/z]``."""
    if isinstance(t, TypeVar):
        return u if t.name == z else t
    if isinstance(t, Chan):
        return Chan(subst_type(t.payload, z, u))
    if isinstance(t, Abs):
        return Abs(subst_type(t.arg, z, u))
    if isinstance(t, Rec):
        if t.binder == z:
            return t
        body = t.body
        binder = t.binder
        fv_u = free_type_vars(u)
        if binder in fv_u:
            fresh = fresh_ident(binder, fv_u | free_type_vars(body) | {z})
            body = subst_type(body, binder, TypeVar(fresh))
            binder = fresh
        return Rec(binder, subst_type(body, z, u))
    return t


# --------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        from .grammar import show

        return show(self)


@dataclass(frozen=True)
class UnitVal(Term):
    pass


@dataclass(frozen=True)
class Name(Term):
    id: str


@dataclass(frozen=True)
class Var(Term):
    id: str


@dataclass(frozen=True)
class Lambda(Term):
    param: str
    param_type: TypeExpr
    body: Term


@dataclass(frozen=True)
class TriggerCall(Term):
    k: str


@dataclass(frozen=True)
class App(Term):
    fun: Term
    arg: Term


@dataclass(frozen=True)
class Input(Term):
    subject: Term
    param: str
    param_type: TypeExpr
    body: Term


@dataclass(frozen=True)
class Output(Term):
    subject: Term
    payload: Term
    cont: Term


@dataclass(frozen=True)
class Match(Term):
    left: Term
    right: Term
    then: Term
    orelse: Term


@dataclass(frozen=True)
class New(Term):
    name: str
    name_type: TypeExpr
    body: Term


@dataclass(frozen=True)
class Par(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Repl(Term):
    body: Term


@dataclass(frozen=True)
class Nil(Term):
    pass


@dataclass(frozen=True)
class Resource(Term):
    k: str
    value: Term


NIL = Nil()
UNIT_VAL = UnitVal()

VALUE_TYPES = (UnitVal, Name, Var, Lambda, TriggerCall)


def is_value(t: Term) -> bool:
    return isinstance(t, VALUE_TYPES)


def par(*procs: Term) -> Term:
    """Left-nested parallel composition; ``par()`` is ``0``."""
    if not procs:
        return NIL
    out = procs[0]
    for p in procs[1:]:
        out = Par(out, p)
    return out


def news(binders: Iterable[Tuple[str, TypeExpr]], body: Term) -> Term:
    out = body
    for name, ty in reversed(list(binders)):
        out = New(name, ty, out)
    return out


def children(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, Lambda):
        return (t.body,)
    if isinstance(t, App):
        return (t.fun, t.arg)
    if isinstance(t, Input):
        return (t.subject, t.body)
    if isinstance(t, Output):
        return (t.subject, t.payload, t.cont)
    if isinstance(t, Match):
        return (t.left, t.right, t.then, t.orelse)
    if isinstance(t, New):
        return (t.body,)
    if isinstance(t, Par):
        return (t.left, t.right)
    if isinstance(t, Repl):
        return (t.body,)
    if isinstance(t, Resource):
        return (t.value,)
    return ()


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        stack.extend(reversed(children(s)))


def depth(t: Term) -> int:
    kids = children(t)
    return 1 + max((depth(k) for k in kids), default=0)


def size(t: Term) -> int:
    return sum(1 for _ in subterms(t))


# --------------------------------------------------------------------------
# Free identifiers


def free_names(t: Term) -> Set[str]:
    """Channel names occurring free in ``t`` (``New`` is the only binder)."""
    if isinstance(t, Name):
        return {t.id}
    if isinstance(t, New):
        return free_names(t.body) - {t.name}
    out: Set[str] = set()
    for c in children(t):
        out |= free_names(c)
    return out


def free_vars(t: Term) -> Set[str]:
    if isinstance(t, Var):
        return {t.id}
    if isinstance(t, (Lambda, Input)):
        inner = free_vars(t.body) - {t.param}
        if isinstance(t, Input):
            inner |= free_vars(t.subject)
        return inner
    out: Set[str] = set()
    for c in children(t):
        out |= free_vars(c)
    return out


def bound_names(t: Term) -> Set[str]:
    return {s.name for s in subterms(t) if isinstance(s, New)}


def bound_vars(t: Term) -> Set[str]:
    return {s.param for s in subterms(t) if isinstance(s, (Lambda, Input))}


def trigger_calls(t: Term) -> Set[str]:
    return {s.k for s in subterms(t) if isinstance(s, TriggerCall)}


def resource_ids(t: Term) -> Set[str]:
    return {s.k for s in subterms(t) if isinstance(s, Resource)}


def triggers(t: Term) -> Set[str]:
    return trigger_calls(t) | resource_ids(t)


def contains_call(t: Term, k: str) -> bool:
    return any(isinstance(s, TriggerCall) and s.k == k for s in subterms(t))


# --------------------------------------------------------------------------
# Fresh identifiers


_SUFFIX = re.compile(r"^(.*?)(_\d+)?$")


def fresh_ident(base: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    if base not in avoid:
        return base
    stem = _SUFFIX.match(base).group(1) or "v"
    i = 1
    while f"{stem}_{i}" in avoid:
        i += 1
    return f"{stem}_{i}"


def indexed_fresh(prefix: str, avoid: Iterable[str]) -> str:
    """Smallest ``prefix{i}`` not in ``avoid``."""
    avoid = set(avoid)
    i = 0
    while f"{prefix}{i}" in avoid:
        i += 1
    return f"{prefix}{i}"


@dataclass
class Allocator:
    """Hands out canonical fresh identifiers ``k0, k1, ...`` / ``b0, b1, ...``.

    The caller owns the allocator; nothing here is shared between threads.
    """

    used: Set[str] = field(default_factory=set)

    def trigger(self) -> str:
        k = indexed_fresh("k", self.used)
        self.used.add(k)
        return k

    def channel(self) -> str:
        b = indexed_fresh("b", self.used)
        self.used.add(b)
        return b


# --------------------------------------------------------------------------
# Substitution


def _fv_of_values(values: Iterable[Term]) -> Tuple[Set[str], Set[str]]:
    names: Set[str] = set()
    vars_: Set[str] = set()
    for v in values:
        names |= free_names(v)
        vars_ |= free_vars(v)
    return names, vars_


class _Subst:
    """Simultaneous capture-avoiding substitution.

    ``vmap`` replaces free variables by values, ``tmap`` replaces trigger
    calls by values and ``nmap`` renames free channel names.
    """

    def __init__(self, vmap: Mapping[str, Term], tmap: Mapping[str, Term], nmap: Mapping[str, str]):
        self.vmap = dict(vmap)
        self.tmap = dict(tmap)
        self.nmap = dict(nmap)
        n, v = _fv_of_values(list(self.vmap.values()) + list(self.tmap.values()))
        self.in_names = n | set(self.nmap.values())
        self.in_vars = v

    def run(self, t: Term, vmap, nmap) -> Term:
        if not vmap and not nmap and not self.tmap:
            return t
        if isinstance(t, Var):
            return vmap.get(t.id, t)
        if isinstance(t, Name):
            if t.id in nmap:
                return Name(nmap[t.id])
            return t
        if isinstance(t, TriggerCall):
            return self.tmap.get(t.k, t)
        if isinstance(t, (UnitVal, Nil)):
            return t
        if isinstance(t, (Lambda, Input)):
            param = t.param
            inner = {k: v for k, v in vmap.items() if k != param}
            body = t.body
            if param in self.in_vars and (inner or nmap or self.tmap):
                fresh = fresh_ident(param, self.in_vars | free_vars(body) | set(inner))
                body = _Subst({param: Var(fresh)}, {}, {}).run(body, {param: Var(fresh)}, {})
                param = fresh
            body = self.run(body, inner, nmap)
            if isinstance(t, Lambda):
                return Lambda(param, t.param_type, body)
            return Input(self.run(t.subject, vmap, nmap), param, t.param_type, body)
        if isinstance(t, New):
            name = t.name
            inner_n = {k: v for k, v in nmap.items() if k != name}
            body = t.body
            if name in self.in_names and (vmap or inner_n or self.tmap):
                fresh = fresh_ident(name, self.in_names | free_names(body) | set(inner_n))
                body = rename_names(body, {name: fresh})
                name = fresh
            return New(name, t.name_type, self.run(body, vmap, inner_n))
        if isinstance(t, App):
            return App(self.run(t.fun, vmap, nmap), self.run(t.arg, vmap, nmap))
        if isinstance(t, Output):
            return Output(self.run(t.subject, vmap, nmap), self.run(t.payload, vmap, nmap), self.run(t.cont, vmap, nmap))
        if isinstance(t, Match):
            return Match(
                self.run(t.left, vmap, nmap),
                self.run(t.right, vmap, nmap),
                self.run(t.then, vmap, nmap),
                self.run(t.orelse, vmap, nmap),
            )
        if isinstance(t, Par):
            return Par(self.run(t.left, vmap, nmap), self.run(t.right, vmap, nmap))
        if isinstance(t, Repl):
            return Repl(self.run(t.body, vmap, nmap))
        if isinstance(t, Resource):
            return Resource(t.k, self.run(t.value, vmap, nmap))
        raise TypeError(f"unknown term {t!r}")


def subst_value(t: Term, x: str, v: Term) -> Term:
    """``t[v/x]`` for a variable ``x``; binders are renamed to avoid capture."""
    if not is_value(v):
        raise ValueError(f"substituted term is not a value: {v!r}")
    s = _Subst({x: v}, {}, {})
    return s.run(t, s.vmap, s.nmap)


def subst_values(t: Term, mapping: Mapping[str, Term]) -> Term:
    for v in mapping.values():
        if not is_value(v):
            raise ValueError(f"substituted term is not a value: {v!r}")
    s = _Subst(mapping, {}, {})
    return s.run(t, s.vmap, s.nmap)


def subst_trigger(c: Term, k: str, v: Term) -> Term:
    """Replace every ``call k`` by ``v``; ``Resource(k, _)`` nodes stay as they are."""
    if not is_value(v):
        raise ValueError(f"substituted term is not a value: {v!r}")
    s = _Subst({}, {k: v}, {})
    return s.run(c, s.vmap, s.nmap)


def rename_names(t: Term, mapping: Mapping[str, str]) -> Term:
    if not mapping:
        return t
    s = _Subst({}, {}, mapping)
    return s.run(t, s.vmap, s.nmap)


def rename_triggers(t: Term, mapping: Mapping[str, str]) -> Term:
    """Rename trigger identifiers in both call and resource positions."""
    if isinstance(t, TriggerCall):
        return TriggerCall(mapping.get(t.k, t.k))
    if isinstance(t, Resource):
        return Resource(mapping.get(t.k, t.k), rename_triggers(t.value, mapping))
    if not children(t):
        return t
    return _rebuild(t, [rename_triggers(c, mapping) for c in children(t)])


def _rebuild(t: Term, kids) -> Term:
    if isinstance(t, Lambda):
        return Lambda(t.param, t.param_type, kids[0])
    if isinstance(t, App):
        return App(*kids)
    if isinstance(t, Input):
        return Input(kids[0], t.param, t.param_type, kids[1])
    if isinstance(t, Output):
        return Output(*kids)
    if isinstance(t, Match):
        return Match(*kids)
    if isinstance(t, New):
        return New(t.name, t.name_type, kids[0])
    if isinstance(t, Par):
        return Par(*kids)
    if isinstance(t, Repl):
        return Repl(kids[0])
    if isinstance(t, Resource):
        return Resource(t.k, kids[0])
    return t


# --------------------------------------------------------------------------
# Alpha canonical form


def alpha_canonical(t: Term, avoid_names: Iterable[str] = (), avoid_vars: Iterable[str] = (),
                    start: Tuple[int, int] = (0, 0)) -> Term:
    """Rename bound names to ``c0, c1, ...`` and bound variables to ``x0, x1, ...``.

    Numbering follows a left-to-right pre-order walk and skips identifiers
    occurring free in ``t`` so no capture can happen.
    """
    skip_n = free_names(t) | set(avoid_names)
    skip_v = free_vars(t) | set(avoid_vars)
    counters = list(start)

    def next_id(slot: int, prefix: str, skip: Set[str]) -> str:
        while True:
            cand = f"{prefix}{counters[slot]}"
            counters[slot] += 1
            if cand not in skip:
                return cand

    def go(t: Term, nenv: Dict[str, str], venv: Dict[str, str]) -> Term:
        if isinstance(t, Name):
            return Name(nenv[t.id]) if t.id in nenv else t
        if isinstance(t, Var):
            return Var(venv[t.id]) if t.id in venv else t
        if isinstance(t, Lambda):
            x = next_id(1, "x", skip_v)
            return Lambda(x, t.param_type, go(t.body, nenv, {**venv, t.param: x}))
        if isinstance(t, Input):
            subj = go(t.subject, nenv, venv)
            x = next_id(1, "x", skip_v)
            return Input(subj, x, t.param_type, go(t.body, nenv, {**venv, t.param: x}))
        if isinstance(t, New):
            a = next_id(0, "c", skip_n)
            return New(a, t.name_type, go(t.body, {**nenv, t.name: a}, venv))
        kids = children(t)
        if not kids:
            return t
        return _rebuild(t, [go(k, nenv, venv) for k in kids])

    return go(t, {}, {})


def alpha_equiv(s: Term, t: Term) -> bool:
    return alpha_canonical(s) == alpha_canonical(t)


# --------------------------------------------------------------------------
# Configuration predicates


class ValidationError(ValueError):
    pass


def validate_config(c: Term) -> None:
    """Reject misplaced values, nested resources and duplicate resources.

    Resources may only sit under ``|`` and ``nu`` (the configuration
    grammar); each trigger identifier owns at most one resource.
    """
    seen: Set[str] = set()

    def proc(t: Term, top: bool) -> None:
        if isinstance(t, Resource):
            if not top:
                raise ValidationError(f"resource for {t.k} under a prefix")
            if t.k in seen:
                raise ValidationError(f"resource for {t.k} appears more than once")
            seen.add(t.k)
            value(t.value)
        elif isinstance(t, Par):
            proc(t.left, top)
            proc(t.right, top)
        elif isinstance(t, New):
            proc(t.body, top)
        elif isinstance(t, Repl):
            proc(t.body, False)
        elif isinstance(t, Nil):
            pass
        elif isinstance(t, App):
            value(t.fun)
            value(t.arg)
        elif isinstance(t, Input):
            value(t.subject)
            proc(t.body, False)
        elif isinstance(t, Output):
            value(t.subject)
            value(t.payload)
            proc(t.cont, False)
        elif isinstance(t, Match):
            value(t.left)
            value(t.right)
            proc(t.then, False)
            proc(t.orelse, False)
        else:
            raise ValidationError(f"value {t!r} in process position")

    def value(v: Term) -> None:
        if not is_value(v):
            raise ValidationError(f"process {v!r} in value position")
        if isinstance(v, Lambda):
            proc(v.body, False)

    proc(c, True)


def is_balanced(c: Term) -> bool:
    """No trigger identifier has both a call and a resource in ``c``."""
    return not (trigger_calls(c) & resource_ids(c))


class Guard(enum.Enum):
    ABSENT = "absent"
    GUARDED = "guarded"
    UNGUARDED = "unguarded"
    MIXED = "mixed"


def _combine(a: Guard, b: Guard) -> Guard:
    if a is Guard.ABSENT:
        return b
    if b is Guard.ABSENT or a is b:
        return a
    return Guard.MIXED


def guarded_occurrence(x: str, p: Term) -> Guard:
    """Classify the free occurrences of variable ``x`` in process ``p``.

    Only an application headed by ``x`` reached through ``|``, ``nu`` and
    ``!`` is unguarded; anything below a prefix, a match, or inside an
    argument is guarded.
    """
    if x not in free_vars(p):
        return Guard.ABSENT
    if isinstance(p, App):
        if p.fun == Var(x):
            return Guard.UNGUARDED if x not in free_vars(p.arg) else Guard.MIXED
        return Guard.GUARDED
    if isinstance(p, (Input, Output, Match, Resource)):
        return Guard.GUARDED
    if isinstance(p, New):
        return guarded_occurrence(x, p.body)
    if isinstance(p, Repl):
        return guarded_occurrence(x, p.body)
    if isinstance(p, Par):
        return _combine(guarded_occurrence(x, p.left), guarded_occurrence(x, p.right))
    return Guard.GUARDED
