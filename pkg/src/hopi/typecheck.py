"""Typing for HOpi values, processes and augmented configurations.

Recursive types are iso-recursive: ``rec Z. T`` is identified with its
unfolding by ``type_iso``, which is decided coinductively over
head-normalized types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .grammar import show, show_type
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
    Var,
    free_type_vars,
    is_value,
    subst_type,
)


class TypeCheckError(Exception):
    """A failed typing rule instance."""

    def __init__(self, rule: str, subject: Term, expected: str = "", found: str = ""):
        self.rule = rule
        self.subject = subject
        self.expected = expected
        self.found = found
        msg = f"[{rule}] {show(subject)}"
        if expected or found:
            msg += f": expected {expected or '-'}, found {found or '-'}"
        super().__init__(msg)


@dataclass
class Env:
    """Channel, variable and trigger bindings.

    ``triggers[k] = T`` stands for ``k : ⇑T``.
    """

    channels: Dict[str, TypeExpr] = field(default_factory=dict)
    vars: Dict[str, TypeExpr] = field(default_factory=dict)
    triggers: Dict[str, TypeExpr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        keys = [set(self.channels), set(self.vars), set(self.triggers)]
        if keys[0] & keys[1] or keys[0] & keys[2] or keys[1] & keys[2]:
            raise ValueError("environment binding maps overlap")
        for a, t in self.channels.items():
            if not is_channel_type(t):
                raise TypeCheckError("env", Name(a), "channel type", show_type(t))

    @classmethod
    def of(cls, channels: Optional[Mapping[str, TypeExpr]] = None,
           triggers: Optional[Mapping[str, TypeExpr]] = None) -> "Env":
        return cls(dict(channels or {}), {}, dict(triggers or {}))


# --------------------------------------------------------------------------
# Type-level operations


def check_guarded_type(t: TypeExpr) -> bool:
    """Every ``rec`` binder occurs only under ``ch<>`` or ``abs<>`` in its body."""

    def unguarded(t: TypeExpr) -> Set[str]:
        # free type variables occurring outside any ch/abs constructor
        if isinstance(t, TypeVar):
            return {t.name}
        if isinstance(t, Rec):
            return unguarded(t.body) - {t.binder}
        return set()

    def ok(t: TypeExpr) -> bool:
        if isinstance(t, Rec):
            return t.binder not in unguarded(t.body) and ok(t.body)
        if isinstance(t, Chan):
            return ok(t.payload)
        if isinstance(t, Abs):
            return ok(t.arg)
        return True

    return ok(t)


def unfold_rec(t: TypeExpr) -> TypeExpr:
    if not isinstance(t, Rec):
        raise ValueError(f"not a recursive type: {show_type(t)}")
    return subst_type(t.body, t.binder, t)


@lru_cache(maxsize=65536)
def head_normal(t: TypeExpr) -> TypeExpr:
    """Unfold outer ``rec`` binders until a constructor or variable shows."""
    seen = 0
    while isinstance(t, Rec):
        t = unfold_rec(t)
        seen += 1
        if seen > 1000:
            raise ValueError("unguarded recursive type")
    return t


def type_iso(s: TypeExpr, t: TypeExpr) -> bool:
    """Decide ``s ~iso t`` by a coinductive walk with an assumption set."""
    if s == t:
        return True
    return _iso_cached(s, t)


@lru_cache(maxsize=65536)
def _iso_cached(s: TypeExpr, t: TypeExpr) -> bool:
    assumed: Set[Tuple[TypeExpr, TypeExpr]] = set()
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        if a == b or (a, b) in assumed:
            continue
        assumed.add((a, b))
        a, b = head_normal(a), head_normal(b)
        if type(a) is not type(b):
            return False
        if isinstance(a, Unit):
            continue
        if isinstance(a, Chan):
            stack.append((a.payload, b.payload))
        elif isinstance(a, Abs):
            stack.append((a.arg, b.arg))
        elif isinstance(a, TypeVar):
            if a.name != b.name:
                return False
    return True


def is_channel_type(t: TypeExpr) -> bool:
    return isinstance(head_normal(t), Chan)


def is_abs_type(t: TypeExpr) -> bool:
    return isinstance(head_normal(t), Abs)


def is_base_type(t: TypeExpr) -> bool:
    """Unit or a channel type, up to unfolding."""
    return isinstance(head_normal(t), (Unit, Chan))


def chan_payload(t: TypeExpr) -> TypeExpr:
    h = head_normal(t)
    if not isinstance(h, Chan):
        raise ValueError(f"not a channel type: {show_type(t)}")
    return h.payload


def abs_arg(t: TypeExpr) -> TypeExpr:
    h = head_normal(t)
    if not isinstance(h, Abs):
        raise ValueError(f"not an abstraction type: {show_type(t)}")
    return h.arg


def _check_annotation(t: TypeExpr, where: Term) -> None:
    if free_type_vars(t):
        raise TypeCheckError("annotation", where, "closed type", show_type(t))
    if not check_guarded_type(t):
        raise TypeCheckError("annotation", where, "guarded recursive type", show_type(t))


# --------------------------------------------------------------------------
# Values and processes


class _Checker:
    def __init__(self, env: Env):
        self.channels = env.channels
        self.triggers = env.triggers

    def infer(self, v: Term, vars_: Mapping[str, TypeExpr]) -> TypeExpr:
        if isinstance(v, UnitVal):
            return UNIT
        if isinstance(v, Name):
            if v.id not in self.channels:
                raise TypeCheckError("name", v, "bound channel name", "unbound")
            return self.channels[v.id]
        if isinstance(v, Var):
            if v.id not in vars_:
                raise TypeCheckError("var", v, "bound variable", "unbound")
            return vars_[v.id]
        if isinstance(v, Lambda):
            _check_annotation(v.param_type, v)
            self.proc(v.body, {**vars_, v.param: v.param_type})
            return Abs(v.param_type)
        if isinstance(v, TriggerCall):
            if v.k not in self.triggers:
                raise TypeCheckError("trigger", v, "declared trigger", "undeclared")
            return Abs(self.triggers[v.k])
        raise TypeCheckError("value", v, "value", type(v).__name__)

    def check(self, v: Term, expected: TypeExpr, vars_, rule: str) -> None:
        found = self.infer(v, vars_)
        if not type_iso(found, expected):
            raise TypeCheckError(rule, v, show_type(expected), show_type(found))

    def chan_of(self, v: Term, vars_, rule: str) -> TypeExpr:
        ty = self.infer(v, vars_)
        h = head_normal(ty)
        if not isinstance(h, Chan):
            raise TypeCheckError(rule, v, "channel type", show_type(ty))
        return h.payload

    def proc(self, p: Term, vars_: Mapping[str, TypeExpr]) -> None:
        if isinstance(p, Nil):
            return
        if isinstance(p, Par):
            self.proc(p.left, vars_)
            self.proc(p.right, vars_)
        elif isinstance(p, Repl):
            self.proc(p.body, vars_)
        elif isinstance(p, New):
            _check_annotation(p.name_type, p)
            if not is_channel_type(p.name_type):
                raise TypeCheckError("new", p, "channel type", show_type(p.name_type))
            saved = self.channels
            self.channels = {**saved, p.name: p.name_type}
            try:
                self.proc(p.body, vars_)
            finally:
                self.channels = saved
        elif isinstance(p, App):
            fty = self.infer(p.fun, vars_)
            h = head_normal(fty)
            if not isinstance(h, Abs):
                raise TypeCheckError("app", p.fun, "abstraction type", show_type(fty))
            self.check(p.arg, h.arg, vars_, "app")
        elif isinstance(p, Input):
            payload = self.chan_of(p.subject, vars_, "input")
            _check_annotation(p.param_type, p)
            if not type_iso(payload, p.param_type):
                raise TypeCheckError("input", p, show_type(payload), show_type(p.param_type))
            self.proc(p.body, {**vars_, p.param: p.param_type})
        elif isinstance(p, Output):
            payload = self.chan_of(p.subject, vars_, "output")
            self.check(p.payload, payload, vars_, "output")
            self.proc(p.cont, vars_)
        elif isinstance(p, Match):
            lt = self.chan_of(p.left, vars_, "match")
            rt = self.chan_of(p.right, vars_, "match")
            if not type_iso(lt, rt):
                raise TypeCheckError("match", p, f"ch<{show_type(lt)}>", f"ch<{show_type(rt)}>")
            self.proc(p.then, vars_)
            self.proc(p.orelse, vars_)
        elif isinstance(p, Resource):
            if p.k not in self.triggers:
                raise TypeCheckError("resource", p, "declared trigger", "undeclared")
            self.check(p.value, Abs(self.triggers[p.k]), vars_, "resource")
        else:
            raise TypeCheckError("process", p, "process", type(p).__name__)


def infer_value_type(env: Env, v: Term) -> TypeExpr:
    if not is_value(v):
        raise TypeCheckError("value", v, "value", type(v).__name__)
    return _Checker(env).infer(v, env.vars)


def check_config(env: Env, c: Term) -> None:
    """Raise ``TypeCheckError`` unless ``env ⊢ c``."""
    _Checker(env).proc(c, env.vars)


def well_typed(env: Env, c: Term) -> bool:
    try:
        check_config(env, c)
    except TypeCheckError:
        return False
    return True


def check_subject_reduction(env: Env, c: Term, steps: int, max_states: int = 5000) -> Optional[List[Term]]:
    """Retype every configuration reachable in at most ``steps`` reductions.

    Returns ``None`` when all of them type-check, otherwise the reduction
    trace from ``c`` to the first ill-typed reduct.
    """
    from .reduction import reduce_step, struct_normal

    check_config(env, c)
    start = struct_normal(c)
    parent: Dict[Term, Optional[Term]] = {start: None}
    layer = [start]
    for _ in range(steps):
        nxt = []
        for s in layer:
            for step in reduce_step(s):
                t = step.target
                if t in parent:
                    continue
                parent[t] = s
                if not well_typed(env, t):
                    trace = [t]
                    while parent[trace[-1]] is not None:
                        trace.append(parent[trace[-1]])
                    return list(reversed(trace))
                nxt.append(t)
                if len(parent) >= max_states:
                    return None
        layer = nxt
    return None
