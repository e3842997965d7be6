"""Structural congruence, reduction, housekeeping steps and barbs.

Configurations are kept in a prenex normal form: every restriction that
sits under ``|``/``nu`` is pulled to the top (unused ones are dropped), the
parallel components are sorted by an alpha-invariant key, and bound
identifiers are then renamed canonically. Replication is never unfolded by
normalization; redex search takes one copy of each ``!P`` on demand.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .grammar import show
from .syntax import (
    App,
    Input,
    Lambda,
    Match,
    Name,
    New,
    Nil,
    Output,
    Par,
    Repl,
    Term,
    TypeExpr,
    UnitVal,
    Var,
    alpha_canonical,
    free_names,
    news,
    par,
    rename_names,
    subst_value,
    subterms,
)

Binder = Tuple[str, TypeExpr]
Ref = Tuple[int, ...]


# --------------------------------------------------------------------------
# Normal form


def _flatten(t: Term, prefix: str = "%") -> Tuple[List[Binder], List[Term]]:
    """Split ``t`` into top-level binders and non-parallel components.

    Binders are renamed to ``{prefix}{n}``; the ``%`` marker cannot come
    out of the lexer, so these never clash with user names.
    """
    counter = itertools.count()
    binders: List[Binder] = []
    comps: List[Term] = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Par):
            stack.append(s.right)
            stack.append(s.left)
        elif isinstance(s, Nil):
            continue
        elif isinstance(s, New):
            tmp = f"{prefix}{next(counter)}"
            binders.append((tmp, s.name_type))
            stack.append(rename_names(s.body, {s.name: tmp}))
        else:
            comps.append(s)
    return binders, comps


def decompose(nf: Term) -> Tuple[List[Binder], List[Term]]:
    """Binders and components of a term already in normal form."""
    binders: List[Binder] = []
    while isinstance(nf, New):
        binders.append((nf.name, nf.name_type))
        nf = nf.body
    comps: List[Term] = []
    stack = [nf]
    while stack:
        s = stack.pop()
        if isinstance(s, Par):
            stack.append(s.right)
            stack.append(s.left)
        elif not isinstance(s, Nil):
            comps.append(s)
    return binders, comps


def _name_order(t: Term, wanted: Set[str], out: List[str]) -> None:
    for s in subterms(t):
        if isinstance(s, Name) and s.id in wanted and s.id not in out:
            out.append(s.id)


def _canonical(binders: Sequence[Binder], comps: Sequence[Term]) -> Term:
    used: Set[str] = set()
    for c in comps:
        used |= free_names(c)
    binders = [b for b in binders if b[0] in used]
    bnames = {b[0] for b in binders}
    local = [alpha_canonical(c) for c in comps]
    anon = {b: "_" for b in bnames}
    key0 = [show(c, anon) for c in local]
    order = sorted(range(len(comps)), key=lambda i: key0[i])
    if bnames:
        for _ in range(4):
            seen: List[str] = []
            for i in order:
                _name_order(local[i], bnames, seen)
            idx = {b: f"#{n}" for n, b in enumerate(seen)}
            key1 = [show(c, idx) for c in local]
            new_order = sorted(order, key=lambda i: (key0[i], key1[i]))
            if new_order == order:
                break
            order = new_order
        seen = []
        for i in order:
            _name_order(local[i], bnames, seen)
        rank = {b: n for n, b in enumerate(seen)}
        binders = sorted(binders, key=lambda b: rank[b[0]])
    body = par(*(comps[i] for i in order))
    return alpha_canonical(news(binders, body))


@lru_cache(maxsize=200_000)
def struct_normal(c: Term) -> Term:
    """Canonical representative of ``c`` modulo the monoid laws, scope
    extrusion, garbage restrictions and alpha-conversion."""
    binders, comps = _flatten(c)
    return _canonical(binders, comps)


def normal_key(c: Term) -> str:
    return show(struct_normal(c))


def _unfoldings(nf: Term) -> Set[Term]:
    binders, comps = decompose(nf)
    out = set()
    for c in comps:
        if isinstance(c, Repl):
            out.add(struct_normal(news(binders, par(*comps, c.body))))
    return out


def struct_equiv(c: Term, d: Term) -> bool:
    """Structural equivalence, allowing one replication unfolding per side."""
    nc, nd = struct_normal(c), struct_normal(d)
    if nc == nd:
        return True
    uc, ud = _unfoldings(nc), _unfoldings(nd)
    return nd in uc or nc in ud or bool(uc & ud)


# --------------------------------------------------------------------------
# Redexes


RULES = ("Comm", "Beta", "CondTT", "CondFF", "Housekeeping")


@dataclass(frozen=True)
class ReductionStep:
    source: Term
    target: Term
    rule: str
    path: Tuple[Ref, ...]

    def path_str(self) -> str:
        return format_path(self.path)

    def to_json(self) -> dict:
        return {"rule": self.rule, "path": self.path_str(), "term": show(self.target)}

    def __str__(self) -> str:
        return f"{self.rule} @ {self.path_str()} : {show(self.target)}"


def format_path(path: Sequence[Ref]) -> str:
    return ",".join(".".join(map(str, r)) if len(r) == 1 else f"{r[0]}!{r[1]}" for r in path)


class _Soup:
    """A normal form opened up for redex search, with one copy per ``!P``."""

    def __init__(self, nf: Term):
        self.nf = nf
        self.binders, self.comps = decompose(nf)
        self.copies: Dict[int, Tuple[List[Binder], List[Term]]] = {}
        self.items: List[Tuple[Ref, Term]] = []
        for i, c in enumerate(self.comps):
            self.items.append(((i,), c))
        for i, c in enumerate(self.comps):
            if isinstance(c, Repl):
                cb, cc = _flatten(c.body, prefix=f"%r{i}_")
                self.copies[i] = (cb, cc)
                for j, cj in enumerate(cc):
                    self.items.append(((i, j), cj))
        self.by_ref = dict(self.items)

    def binder_names(self, involved: Iterable[int] = ()) -> Set[str]:
        out = {b for b, _ in self.binders}
        for i in involved:
            out |= {b for b, _ in self.copies[i][0]}
        return out

    def assemble_raw(self, consumed: Iterable[Ref], new: Iterable[Term]) -> Tuple[List[Binder], List[Term]]:
        consumed = set(consumed)
        involved = sorted({r[0] for r in consumed if len(r) == 2})
        binders = list(self.binders)
        comps = [c for i, c in enumerate(self.comps) if (i,) not in consumed]
        for i in involved:
            cb, cc = self.copies[i]
            binders += cb
            comps += [c for j, c in enumerate(cc) if (i, j) not in consumed]
        comps += list(new)
        return binders, comps

    def assemble(self, consumed: Iterable[Ref], new: Iterable[Term]) -> Term:
        binders, comps = self.assemble_raw(consumed, new)
        return struct_normal(news(binders, par(*comps)))


def _unary_redex(t: Term) -> Optional[Tuple[str, Term]]:
    if isinstance(t, App) and isinstance(t.fun, Lambda):
        return "Beta", subst_value(t.fun.body, t.fun.param, t.arg)
    if isinstance(t, Match) and isinstance(t.left, Name) and isinstance(t.right, Name):
        if t.left.id == t.right.id:
            return "CondTT", t.then
        return "CondFF", t.orelse
    return None


def _comm(out: Term, inp: Term) -> Term:
    return Par(out.cont, App(Lambda(inp.param, inp.param_type, inp.body), out.payload))


def reduce_step(c: Term) -> List[ReductionStep]:
    """All one-step reducts of ``c``, each tagged with its rule and position.

    Trigger calls and resources have no reduction rules of their own.
    """
    soup = _Soup(struct_normal(c))
    steps: List[ReductionStep] = []
    seen: Set[Tuple[str, Term]] = set()

    def emit(rule: str, path: Tuple[Ref, ...], target: Term) -> None:
        if (rule, target) in seen:
            return
        seen.add((rule, target))
        steps.append(ReductionStep(soup.nf, target, rule, path))

    for ref, t in soup.items:
        red = _unary_redex(t)
        if red is not None:
            emit(red[0], (ref,), soup.assemble([ref], [red[1]]))
    outs = [(r, t) for r, t in soup.items if isinstance(t, Output) and isinstance(t.subject, Name)]
    inps = [(r, t) for r, t in soup.items if isinstance(t, Input) and isinstance(t.subject, Name)]
    for ro, o in outs:
        for ri, i in inps:
            if o.subject.id == i.subject.id:
                emit("Comm", (ro, ri), soup.assemble([ro, ri], [_comm(o, i)]))
    return steps


def apply_step(source: Term, rule: str, path: Sequence[Ref]) -> Term:
    """Fire ``rule`` at ``path`` in ``source``; raises ``ValueError`` if it does not apply."""
    soup = _Soup(struct_normal(source))
    try:
        items = [soup.by_ref[tuple(r)] for r in path]
    except KeyError as exc:
        raise ValueError(f"no component at {exc}") from None
    if rule == "Comm":
        o, i = items
        if not (isinstance(o, Output) and isinstance(i, Input) and o.subject == i.subject
                and isinstance(o.subject, Name)):
            raise ValueError("Comm does not apply")
        return soup.assemble(path, [_comm(o, i)])
    if rule == "Housekeeping":
        (t,) = items
        red = _h_redex(t, None)
        if red is None:
            raise ValueError("Housekeeping does not apply")
        return soup.assemble(path, [red])
    (t,) = items
    red = _unary_redex(t)
    if red is None or red[0] != rule:
        raise ValueError(f"{rule} does not apply")
    return soup.assemble(path, [red[1]])


def _h_redex(t: Term, channels: Optional[Set[str]]) -> Optional[Term]:
    if not (isinstance(t, App) and isinstance(t.fun, Lambda)):
        return None
    body = t.fun.body
    if (
        isinstance(body, Output)
        and isinstance(body.subject, Name)
        and body.payload == Var(t.fun.param)
        and isinstance(body.cont, Nil)
        and (channels is None or body.subject.id in channels)
    ):
        return Output(body.subject, t.arg, body.cont)
    return None


def housekeeping_step(p: Term, channels: Optional[Iterable[str]] = None) -> List[Term]:
    """One-step ``(\\x:T -> k!<x>.0)(v) -> k!<v>.0`` reducts under evaluation contexts.

    ``channels`` restricts the output subject ``k`` (e.g. to translated triggers).
    """
    chans = set(channels) if channels is not None else None
    soup = _Soup(struct_normal(p))
    out: List[Term] = []
    for ref, t in soup.items:
        red = _h_redex(t, chans)
        if red is not None:
            r = soup.assemble([ref], [red])
            if r not in out:
                out.append(r)
    return out


def housekeeping_closure(p: Term, channels: Optional[Iterable[str]] = None, limit: int = 10_000) -> Set[Term]:
    """Every normal form reachable from ``p`` by zero or more housekeeping steps."""
    start = struct_normal(p)
    seen = {start}
    todo = [start]
    while todo and len(seen) < limit:
        s = todo.pop()
        for r in housekeeping_step(s, channels):
            if r not in seen:
                seen.add(r)
                todo.append(r)
    return seen


# --------------------------------------------------------------------------
# Multi-step exploration


@dataclass
class Reachable:
    """States reached within the budgets, in discovery order."""

    states: List[Term]
    edges: List[ReductionStep]
    frontier: bool
    depth_of: Dict[Term, int] = field(default_factory=dict)
    parent: Dict[Term, Optional[ReductionStep]] = field(default_factory=dict)

    def __contains__(self, t: Term) -> bool:
        return struct_normal(t) in self.depth_of

    def trace_to(self, t: Term) -> List[ReductionStep]:
        t = struct_normal(t)
        out = []
        step = self.parent.get(t)
        while step is not None:
            out.append(step)
            step = self.parent.get(step.source)
        return list(reversed(out))


def reduce_multi(c: Term, max_steps: int, max_states: int = 10_000) -> Reachable:
    """Breadth-first closure under reduction.

    ``frontier`` is set when the budgets cut some reduction sequence short:
    a state at the step bound still reduces, the explored graph has a
    cycle (so sequences longer than the bound exist), or ``max_states`` was hit.
    """
    start = struct_normal(c)
    depth_of = {start: 0}
    parent: Dict[Term, Optional[ReductionStep]] = {start: None}
    states = [start]
    edges: List[ReductionStep] = []
    succ: Dict[Term, List[Term]] = {}
    frontier = False
    queue = deque([start])
    while queue:
        s = queue.popleft()
        d = depth_of[s]
        steps = reduce_step(s)
        if d >= max_steps:
            if steps:
                frontier = True
            continue
        succ[s] = []
        for st in steps:
            edges.append(st)
            succ[s].append(st.target)
            if st.target not in depth_of:
                if len(states) >= max_states:
                    frontier = True
                    continue
                depth_of[st.target] = d + 1
                parent[st.target] = st
                states.append(st.target)
                queue.append(st.target)
    if not frontier:
        frontier = _longest_exceeds(start, succ, max_steps)
    return Reachable(states, edges, frontier, depth_of, parent)


def _longest_exceeds(start: Term, succ: Dict[Term, List[Term]], bound: int) -> bool:
    # cycle reachable, or some acyclic path longer than the bound
    WHITE, GREY, BLACK = 0, 1, 2
    colour: Dict[Term, int] = {}
    longest: Dict[Term, int] = {}
    stack = [(start, iter(succ.get(start, ())))]
    colour[start] = GREY
    while stack:
        node, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            colour[node] = BLACK
            longest[node] = max((1 + longest[s] for s in succ.get(node, ())), default=0)
            continue
        col = colour.get(nxt, WHITE)
        if col == GREY:
            return True
        if col == WHITE:
            colour[nxt] = GREY
            stack.append((nxt, iter(succ.get(nxt, ()))))
    return longest[start] > bound


def format_trace(steps: Iterable[ReductionStep], as_json: bool = False) -> str:
    steps = list(steps)
    if as_json:
        return json.dumps([s.to_json() for s in steps], indent=2)
    return "\n".join(str(s) for s in steps)


# --------------------------------------------------------------------------
# Barbs


def syntactic_barbs(nf: Term) -> Set[str]:
    """Free channels with a top-level unit output in ``nf`` (or in a copy of a ``!P``)."""
    soup = _Soup(struct_normal(nf))
    bound = soup.binder_names(soup.copies)
    out = set()
    for _, t in soup.items:
        if (
            isinstance(t, Output)
            and isinstance(t.subject, Name)
            and isinstance(t.payload, UnitVal)
            and t.subject.id not in bound
        ):
            out.add(t.subject.id)
    return out


def barbs(env, c: Term, max_steps: int, max_states: int = 10_000) -> Set[str]:
    """Channels ``a : ch<unit>`` on which ``c`` can output after at most ``max_steps`` reductions."""
    from .typecheck import chan_payload, head_normal
    from .syntax import Unit

    reach = reduce_multi(c, max_steps, max_states)
    found: Set[str] = set()
    for s in reach.states:
        found |= syntactic_barbs(s)
    if env is None:
        return found
    return {
        a for a in found
        if a in env.channels and isinstance(head_normal(chan_payload(env.channels[a])), Unit)
    }
