"""The augmented labelled transition system over typed nodes.

A node is ``(delta ; theta |- C)`` with ``C`` in normal form. Fresh
identifiers in labels are always the least ``k{i}``/``b{i}`` not bound in
``delta``/``theta``, so two nodes over the same environments produce
syntactically comparable labels.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .grammar import show, show_type
from .reduction import _Soup, reduce_step, struct_normal
from .syntax import (
    Abs,
    App,
    Chan,
    Input,
    Lambda,
    Name,
    Output,
    Resource,
    Term,
    TriggerCall,
    TypeExpr,
    Unit,
    UNIT_VAL,
    indexed_fresh,
    news,
    par,
    rename_names,
)
from .typecheck import Env, check_config, head_normal, type_iso

# --------------------------------------------------------------------------
# Labels

TAU, IN, OUT, BIN, BOUT, TIN, TOUT = "tau", "in", "out", "bin", "bout", "tin", "tout"
_DUAL = {IN: OUT, OUT: IN, BIN: BOUT, BOUT: BIN, TIN: TOUT, TOUT: TIN}


@dataclass(frozen=True)
class Label:
    """``kind`` is one of tau/in/out/bin/bout/tin/tout.

    ``payload`` carries the first-order value of in/out labels, ``fresh``
    the bound channel or trigger of the other visible kinds.
    """

    kind: str
    subject: str = ""
    payload: Optional[Term] = None
    fresh: str = ""

    @property
    def visible(self) -> bool:
        return self.kind != TAU

    def __str__(self) -> str:
        d = self.subject
        if self.kind == TAU:
            return "tau"
        if self.kind == IN:
            return f"{d}?{show(self.payload)}"
        if self.kind == OUT:
            return f"{d}!{show(self.payload)}"
        if self.kind == BIN:
            return f"({self.fresh}){d}?{self.fresh}"
        if self.kind == BOUT:
            return f"({self.fresh}){d}!{self.fresh}"
        if self.kind == TIN:
            return f"{d}?({self.fresh})"
        return f"{d}!({self.fresh})"


TAU_LABEL = Label(TAU)


def complement(a: Label) -> Label:
    if a.kind == TAU:
        raise ValueError("tau has no complement")
    return Label(_DUAL[a.kind], a.subject, a.payload, a.fresh)


def parse_label(text: str) -> Label:
    """Inverse of ``str(label)``; payloads are ``()`` or a channel name."""
    import re

    text = text.strip()
    if text == "tau":
        return TAU_LABEL
    m = re.fullmatch(r"\((\w+)\)(\w+)([?!])(\w+)", text)
    if m:
        b, d, io, b2 = m.groups()
        if b != b2:
            raise ValueError(f"bound label must carry its binder: {text}")
        return Label(BIN if io == "?" else BOUT, d, None, b)
    m = re.fullmatch(r"(\w+)([?!])\((\w+)\)", text)
    if m:
        d, io, k = m.groups()
        return Label(TIN if io == "?" else TOUT, d, None, k)
    m = re.fullmatch(r"(\w+)([?!])(\(\)|\w+)", text)
    if m:
        d, io, v = m.groups()
        payload = UNIT_VAL if v == "()" else Name(v)
        return Label(IN if io == "?" else OUT, d, payload)
    raise ValueError(f"cannot parse label {text!r}")


# --------------------------------------------------------------------------
# Nodes


def _env_tuple(m: Mapping[str, TypeExpr]) -> Tuple[Tuple[str, TypeExpr], ...]:
    return tuple(sorted(m.items()))


@dataclass(frozen=True, eq=False)
class TypedNode:
    delta: Tuple[Tuple[str, TypeExpr], ...]
    theta: Tuple[Tuple[str, TypeExpr], ...]
    config: Term
    key: str = field(default="", compare=False)

    @classmethod
    def make(cls, delta: Mapping[str, TypeExpr], theta: Mapping[str, TypeExpr], config: Term) -> "TypedNode":
        d, t = _env_tuple(delta), _env_tuple(theta)
        nf = struct_normal(config)
        env = "; ".join(f"{a}:{show_type(ty)}" for a, ty in d)
        tenv = "; ".join(f"{k}:{show_type(ty)}" for k, ty in t)
        return cls(d, t, nf, f"{env} | {tenv} |- {show(nf)}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypedNode) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    @property
    def delta_map(self) -> Dict[str, TypeExpr]:
        return dict(self.delta)

    @property
    def theta_map(self) -> Dict[str, TypeExpr]:
        return dict(self.theta)

    def env(self) -> Env:
        return Env.of(self.delta_map, self.theta_map)

    def check(self) -> None:
        """Raise ``TypeCheckError`` if the judgement does not hold."""
        check_config(self.env(), self.config)

    def used(self) -> Set[str]:
        return {a for a, _ in self.delta} | {k for k, _ in self.theta}

    def fresh_trigger(self) -> str:
        return indexed_fresh("k", self.used())

    def fresh_channel(self) -> str:
        return indexed_fresh("b", self.used())

    def __str__(self) -> str:
        return self.key


def _payloads(node: TypedNode, s: TypeExpr) -> List[Term]:
    """Concrete first-order values of type ``s`` known to ``delta``."""
    h = head_normal(s)
    if isinstance(h, Unit):
        return [UNIT_VAL]
    return [Name(a) for a, t in node.delta if type_iso(t, s)]


@lru_cache(maxsize=100_000)
def derive_transitions(node: TypedNode) -> Tuple[Tuple[Label, TypedNode], ...]:
    """Every transition of ``node``; tau moves come from reduction."""
    out: List[Tuple[Label, TypedNode]] = []
    seen: Set[Tuple[Label, TypedNode]] = set()
    delta, theta = node.delta_map, node.theta_map

    def emit(lab: Label, d: Mapping[str, TypeExpr], t: Mapping[str, TypeExpr], c: Term) -> None:
        tgt = TypedNode.make(d, t, c)
        if (lab, tgt) not in seen:
            seen.add((lab, tgt))
            out.append((lab, tgt))

    for st in reduce_step(node.config):
        emit(TAU_LABEL, delta, theta, st.target)

    soup = _Soup(node.config)
    for ref, t in soup.items:
        private = soup.binder_names([ref[0]] if len(ref) == 2 else [])

        def rebuild(new: Iterable[Term], extrude: Optional[Tuple[str, str]] = None) -> Term:
            binders, comps = soup.assemble_raw([ref], new)
            if extrude is not None:
                old, fresh = extrude
                binders = [b for b in binders if b[0] != old]
                comps = [rename_names(c, {old: fresh}) for c in comps]
            return news(binders, par(*comps))

        def first_order_out(d: str, s: TypeExpr, v: Term, rest: List[Term]) -> None:
            if isinstance(v, Name) and v.id in private:
                b = node.fresh_channel()
                emit(Label(BOUT, d, None, b), {**delta, b: s}, theta, rebuild(rest, (v.id, b)))
            else:
                emit(Label(OUT, d, v), delta, theta, rebuild(rest))

        def first_order_in(d: str, s: TypeExpr, make) -> None:
            for w in _payloads(node, s):
                emit(Label(IN, d, w), delta, theta, rebuild([make(w)]))
            if isinstance(head_normal(s), Chan):
                b = node.fresh_channel()
                emit(Label(BIN, d, None, b), {**delta, b: s}, theta, rebuild([make(Name(b))]))

        if isinstance(t, Output) and isinstance(t.subject, Name) and t.subject.id in delta:
            d = t.subject.id
            s = head_normal(delta[d]).payload
            hs = head_normal(s)
            if isinstance(hs, Abs):
                k = node.fresh_trigger()
                emit(Label(TOUT, d, None, k), delta, {**theta, k: hs.arg},
                     rebuild([Resource(k, t.payload), t.cont]))
            else:
                first_order_out(d, s, t.payload, [t.cont])
        elif isinstance(t, Input) and isinstance(t.subject, Name) and t.subject.id in delta:
            d = t.subject.id
            s = head_normal(delta[d]).payload
            hs = head_normal(s)
            lam = Lambda(t.param, t.param_type, t.body)
            if isinstance(hs, Abs):
                k = node.fresh_trigger()
                emit(Label(TIN, d, None, k), delta, {**theta, k: hs.arg},
                     rebuild([App(lam, TriggerCall(k))]))
            else:
                first_order_in(d, s, lambda w, lam=lam: App(lam, w))
        elif isinstance(t, Resource) and t.k in theta:
            u = theta[t.k]
            hu = head_normal(u)
            if isinstance(hu, Abs):
                l = node.fresh_trigger()
                emit(Label(TIN, t.k, None, l), delta, {**theta, l: hu.arg},
                     rebuild([t, App(t.value, TriggerCall(l))]))
            else:
                first_order_in(t.k, u, lambda w, t=t: par(t, App(t.value, w)))
        elif isinstance(t, App) and isinstance(t.fun, TriggerCall) and t.fun.k in theta:
            k = t.fun.k
            u = theta[k]
            hu = head_normal(u)
            if isinstance(hu, Abs):
                l = node.fresh_trigger()
                emit(Label(TOUT, k, None, l), delta, {**theta, l: hu.arg}, rebuild([Resource(l, t.arg)]))
            else:
                first_order_out(k, u, t.arg, [])
    return tuple(out)


def transitions_with(node: TypedNode, label: Label) -> List[TypedNode]:
    return [n for lab, n in derive_transitions(node) if lab == label]


@dataclass
class Weak:
    nodes: List[TypedNode]
    truncated: bool


def tau_closure(node: TypedNode, budget: int = 200) -> Weak:
    seen = {node: None}
    order = [node]
    queue = deque([node])
    truncated = False
    while queue:
        n = queue.popleft()
        for lab, m in derive_transitions(n):
            if lab.kind != TAU or m in seen:
                continue
            if len(order) >= budget:
                truncated = True
                continue
            seen[m] = None
            order.append(m)
            queue.append(m)
    return Weak(order, truncated)


def weak_after(node: TypedNode, label: Label, budget: int = 200) -> Weak:
    """Nodes reachable by ``=>`` (tau) or ``=> -label-> =>``."""
    pre = tau_closure(node, budget)
    if label.kind == TAU:
        return pre
    truncated = pre.truncated
    result: Dict[TypedNode, None] = {}
    for n in pre.nodes:
        for m in transitions_with(n, label):
            post = tau_closure(m, budget)
            truncated |= post.truncated
            for p in post.nodes:
                result[p] = None
    return Weak(list(result), truncated)


# --------------------------------------------------------------------------
# Graphs


@dataclass
class LtsGraph:
    root: TypedNode
    nodes: List[TypedNode]
    edges: List[Tuple[TypedNode, Label, TypedNode]]
    truncated: bool

    def to_json(self) -> dict:
        ids = {n: i for i, n in enumerate(self.nodes)}
        return {
            "nodes": [
                {
                    "id": ids[n],
                    "delta": {a: show_type(t) for a, t in n.delta},
                    "theta": {k: show_type(t) for k, t in n.theta},
                    "term": show(n.config),
                }
                for n in self.nodes
            ],
            "edges": [{"src": ids[s], "label": str(l), "dst": ids[d]} for s, l, d in self.edges],
            "root": ids[self.root],
            "truncated": self.truncated,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def build_lts(root: TypedNode, depth: int, max_nodes: int = 10_000) -> LtsGraph:
    """Breadth-first expansion to ``depth`` transitions from ``root``."""
    dist = {root: 0}
    nodes = [root]
    edges: List[Tuple[TypedNode, Label, TypedNode]] = []
    truncated = False
    queue = deque([root])
    while queue:
        n = queue.popleft()
        trans = derive_transitions(n)
        if dist[n] >= depth:
            truncated |= bool(trans)
            continue
        for lab, m in trans:
            if m not in dist:
                if len(nodes) >= max_nodes:
                    truncated = True
                    continue
                dist[m] = dist[n] + 1
                nodes.append(m)
                queue.append(m)
            edges.append((n, lab, m))
    return LtsGraph(root, nodes, edges, truncated)
