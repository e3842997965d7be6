"""Trigger translation into plain HOpi and the testing contexts for labels.

``call k`` becomes the forwarder ``\\x:T -> k!<x>.0`` and ``res k <= v``
becomes the server ``!k?(y:T).[v](y)``; trigger identifiers are reused
as channel names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .grammar import show
from .lts import BIN, BOUT, IN, OUT, TIN, TOUT, Label, TypedNode, weak_after
from .reduction import decompose, housekeeping_closure, reduce_multi, struct_normal, syntactic_barbs
from .syntax import (
    App,
    Chan,
    Input,
    Lambda,
    Match,
    Name,
    New,
    NIL,
    Output,
    Repl,
    Resource,
    Term,
    TriggerCall,
    TypeExpr,
    Unit,
    UNIT,
    UNIT_VAL,
    UnitVal,
    Var,
    _rebuild,
    children,
    fresh_ident,
    free_vars,
    news,
    par,
    rename_names,
)
from .typecheck import Env, check_config, chan_payload, head_normal, type_iso


class FreshnessViolation(ValueError):
    pass


# --------------------------------------------------------------------------
# Translation


def translate_env(theta: Mapping[str, TypeExpr]) -> Dict[str, TypeExpr]:
    return {k: Chan(t) for k, t in theta.items()}


def _tr(theta: Mapping[str, TypeExpr], t: Term) -> Term:
    if isinstance(t, TriggerCall):
        return Lambda("x", theta[t.k], Output(Name(t.k), Var("x"), NIL))
    if isinstance(t, Resource):
        v = _tr(theta, t.value)
        y = fresh_ident("y", free_vars(v))
        return Repl(Input(Name(t.k), y, theta[t.k], App(v, Var(y))))
    kids = children(t)
    if not kids:
        return t
    return _rebuild(t, [_tr(theta, k) for k in kids])


def translate_config(theta: Mapping[str, TypeExpr], c: Term,
                     delta: Optional[Mapping[str, TypeExpr]] = None) -> Term:
    """``[c]``; when ``delta`` is given, ``c`` is type-checked first."""
    if delta is not None:
        check_config(Env.of(delta, theta), c)
    return _tr(theta, c)


# --------------------------------------------------------------------------
# Testing contexts


def succ_process(delta_prime: Mapping[str, TypeExpr], succ: str) -> Term:
    if len(delta_prime) > 1:
        raise ValueError("success signal carries at most one name")
    if not delta_prime:
        return Output(Name(succ), UNIT_VAL, NIL)
    (b,) = delta_prime
    return Output(Name(succ), Name(b), NIL)


def internal_choice(p: Term, q: Term, avoid: Iterable[str] = ()) -> Term:
    """``nu c.(c!<()>.0 | c?(x).p | c?(x).q)`` with ``c`` fresh."""
    from .syntax import free_names

    c = fresh_ident("c", set(avoid) | free_names(p) | free_names(q))
    x = fresh_ident("x", free_vars(p) | free_vars(q))
    return New(c, Chan(UNIT), par(
        Output(Name(c), UNIT_VAL, NIL),
        Input(Name(c), x, UNIT, p),
        Input(Name(c), x, UNIT, q),
    ))


def not_in_test(x: str, names: Sequence[str], then_p: Term, else_p: Term) -> Term:
    """``if x not in names then then_p else else_p`` as a cascade of matches."""
    out = then_p
    for a in reversed(list(names)):
        out = Match(Var(x), Name(a), else_p, out)
    return out


def _subject_payload(delta, theta, d: str) -> TypeExpr:
    if d in delta:
        return chan_payload(delta[d])
    if d in theta:
        return theta[d]
    raise ValueError(f"label subject {d} is not in the environment")


def context_names(delta, theta, extra: Iterable[str] = ()) -> Tuple[str, str]:
    used = set(delta) | set(theta) | set(extra)
    succ = fresh_ident("succ", used)
    dead = fresh_ident("dead", used | {succ})
    return succ, dead


def testing_context(delta: Mapping[str, TypeExpr], theta: Mapping[str, TypeExpr], a: Label,
                    succ: str = "succ", dead: str = "dead") -> Term:
    """The process that signals on ``succ`` once its partner performs ``a``.

    ``dead`` only takes part in the freshness check; no row uses it.
    """
    used = set(delta) | set(theta)
    for n in (succ, dead):
        if n in used:
            raise FreshnessViolation(f"{n} is bound in the environment")
    if succ == dead:
        raise FreshnessViolation("success and failure channels coincide")
    if a.fresh and (a.fresh in used or a.fresh in (succ, dead)):
        raise FreshnessViolation(f"label binder {a.fresh} is not fresh")
    d = a.subject
    t = _subject_payload(delta, theta, d)
    ok = Output(Name(succ), UNIT_VAL, NIL)
    x = "x"
    if a.kind == IN:
        return Output(Name(d), a.payload, ok)
    if a.kind == OUT:
        if isinstance(head_normal(t), Unit):
            return Input(Name(d), x, t, ok)
        return Input(Name(d), x, t, Match(Var(x), a.payload, ok, NIL))
    if a.kind == BIN:
        b = a.fresh
        return New(b, t, Output(Name(d), Name(b), Output(Name(succ), Name(b), NIL)))
    if a.kind == BOUT:
        known = [n for n, ty in sorted({**delta, **translate_env(theta)}.items()) if type_iso(ty, t)]
        return Input(Name(d), x, t, not_in_test(x, known, Output(Name(succ), Var(x), NIL), NIL))
    u = head_normal(t).arg
    k = a.fresh
    if a.kind == TIN:
        fwd = Lambda(x, u, Output(Name(k), Var(x), NIL))
        return Output(Name(d), fwd, ok)
    if a.kind == TOUT:
        server = Repl(Input(Name(k), "y", u, App(Var(x), Var("y"))))
        return Input(Name(d), x, t, par(server, ok))
    raise ValueError("tau has no testing context")


def succ_type(delta, theta, a: Label) -> TypeExpr:
    """Channel type of the success signal for label ``a``."""
    if a.kind in (BIN, BOUT):
        return Chan(_subject_payload(delta, theta, a.subject))
    return Chan(UNIT)


def context_env(delta, theta, a: Label, succ: str, dead: str) -> Env:
    """Environment typing ``testing_context(...) | [D]``."""
    chans = {**delta, **translate_env(theta), succ: succ_type(delta, theta, a), dead: Chan(UNIT)}
    if a.kind in (TIN, TOUT):
        chans[a.fresh] = Chan(head_normal(_subject_payload(delta, theta, a.subject)).arg)
    return Env.of(chans)


# --------------------------------------------------------------------------
# Probing


@dataclass
class ProbeResult:
    reached: bool
    residue: Optional[Term]
    factorization_found: bool
    truncated: bool
    lts_enabled: bool
    dead_barbed: bool
    residues: List[Term]

    def to_json(self) -> dict:
        return {
            "reached": self.reached,
            "residue": show(self.residue) if self.residue is not None else None,
            "factorizationFound": self.factorization_found,
            "truncated": self.truncated,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def canonical_label(delta, theta, a: Label) -> Label:
    """Replace the label's binder by the one the LTS would allocate."""
    if not a.fresh:
        return a
    node = TypedNode.make(delta, theta, NIL)
    fresh = node.fresh_trigger() if a.kind in (TIN, TOUT) else node.fresh_channel()
    return replace(a, fresh=fresh)


def extract_residue(state: Term, succ: str, label: Label) -> Optional[Term]:
    """``P`` from a state ``nu D'.(succ!<w>.0 | P)``, or ``None``."""
    binders, comps = decompose(struct_normal(state))
    bound = {b for b, _ in binders}
    for i, c in enumerate(comps):
        if not (isinstance(c, Output) and c.subject == Name(succ) and c.cont == NIL):
            continue
        rest = comps[:i] + comps[i + 1:]
        w = c.payload
        if isinstance(w, UnitVal):
            return struct_normal(news(binders, par(*rest)))
        if isinstance(w, Name) and w.id in bound and label.fresh:
            keep = [b for b in binders if b[0] != w.id]
            body = rename_names(par(*rest), {w.id: label.fresh})
            return struct_normal(news(keep, body))
        if isinstance(w, Name) and label.fresh and w.id == label.fresh:
            return struct_normal(news(binders, par(*rest)))
    return None


def probe_label(delta: Mapping[str, TypeExpr], theta: Mapping[str, TypeExpr], d: Term, a: Label,
                max_steps: int = 8, max_states: int = 5000, tau_budget: int = 200) -> ProbeResult:
    """Run ``testing_context(a) | [d]`` and compare against ``d``'s weak ``a`` moves."""
    a = canonical_label(delta, theta, a)
    extra = [a.fresh] if a.fresh else []
    succ, dead = context_names(delta, theta, extra)
    tester = testing_context(delta, theta, a, succ, dead)
    system = par(tester, translate_config(theta, d))
    reach = reduce_multi(system, max_steps, max_states)
    residues: List[Term] = []
    dead_barbed = False
    for s in reach.states:
        if dead in syntactic_barbs(s):
            dead_barbed = True
        r = extract_residue(s, succ, a)
        if r is not None and r not in residues:
            residues.append(r)
    weak = weak_after(TypedNode.make(delta, theta, d), a, tau_budget)
    closures = set()
    for node in weak.nodes:
        closures |= housekeeping_closure(translate_config(node.theta_map, node.config))
    factoring = [r for r in residues if r in closures]
    shown = factoring[0] if factoring else (residues[0] if residues else None)
    return ProbeResult(
        reached=bool(residues),
        residue=shown,
        factorization_found=bool(factoring),
        truncated=reach.frontier or weak.truncated,
        lts_enabled=bool(weak.nodes),
        dead_barbed=dead_barbed,
        residues=residues,
    )
