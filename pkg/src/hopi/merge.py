"""The merge operator: resolve trigger calls against stored resources.

``merge(C)`` repeatedly picks a resource ``k <= v`` whose value does not
call ``k`` itself, drops it, and substitutes ``v`` for ``call k`` in the
rest of the configuration. It is defined exactly when the reference graph
is acyclic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Set, Tuple, Union

from .reduction import decompose, struct_normal
from .syntax import Resource, Term, news, par, subst_trigger, trigger_calls


def natural_key(ident: str) -> Tuple:
    """``k2 < k10``: digit runs compare numerically."""
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", ident))


@dataclass
class RefGraph:
    vertices: Set[str] = field(default_factory=set)
    edges: Set[Tuple[str, str]] = field(default_factory=set)

    def successors(self, k: str) -> List[str]:
        return sorted((l for (j, l) in self.edges if j == k), key=natural_key)


def _resources(c: Term) -> Tuple[list, List[Term], List[Resource]]:
    binders, comps = decompose(struct_normal(c))
    res = [t for t in comps if isinstance(t, Resource)]
    rest = [t for t in comps if not isinstance(t, Resource)]
    return binders, rest, res


def ref_graph(c: Term) -> RefGraph:
    """Vertices are stored triggers; ``k -> l`` when the value stored at ``k`` calls ``l``."""
    _, _, res = _resources(c)
    g = RefGraph()
    for r in res:
        g.vertices.add(r.k)
        for l in trigger_calls(r.value):
            g.edges.add((r.k, l))
    return g


def find_cycle(g: RefGraph) -> Optional[List[str]]:
    """A cycle ``[k0, k1, ..., k0]`` among the vertices, or ``None``."""
    colour: Dict[str, int] = {}
    for start in sorted(g.vertices, key=natural_key):
        if start in colour:
            continue
        path = [start]
        colour[start] = 1
        stack = [iter(g.successors(start))]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                colour[path.pop()] = 2
                continue
            if nxt not in g.vertices:
                continue
            if colour.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            if nxt not in colour:
                colour[nxt] = 1
                path.append(nxt)
                stack.append(iter(g.successors(nxt)))
    return None


def is_acyclic(g: RefGraph) -> bool:
    return find_cycle(g) is None


@dataclass(frozen=True)
class Done:
    term: Term


@dataclass(frozen=True)
class Next:
    term: Term
    eliminated: str


@dataclass(frozen=True)
class Stuck:
    term: Term


@dataclass(frozen=True)
class Undefined:
    cycle: Tuple[str, ...]

    def __str__(self) -> str:
        return "merge undefined: cycle " + " -> ".join(self.cycle)


def eligible(c: Term) -> List[str]:
    """Stored triggers whose value does not call themselves, least first."""
    _, _, res = _resources(c)
    return sorted((r.k for r in res if r.k not in trigger_calls(r.value)), key=natural_key)


def eliminate(c: Term, k: str) -> Term:
    """One rewrite: drop ``k <= v`` and put ``v`` for every ``call k``."""
    binders, rest, res = _resources(c)
    mine = [r for r in res if r.k == k]
    if not mine:
        raise ValueError(f"no resource for {k}")
    v = mine[0].value
    if k in trigger_calls(v):
        raise ValueError(f"resource for {k} calls itself")
    others = [subst_trigger(t, k, v) for t in rest + [r for r in res if r.k != k]]
    return struct_normal(news(binders, par(*others)))


def merge_step(c: Term) -> Union[Done, Next, Stuck]:
    c = struct_normal(c)
    _, _, res = _resources(c)
    if not res:
        return Done(c)
    ks = eligible(c)
    if not ks:
        return Stuck(c)
    return Next(eliminate(c, ks[0]), ks[0])


def merge(c: Term) -> Union[Term, Undefined]:
    cycle = find_cycle(ref_graph(c))
    if cycle is not None:
        return Undefined(tuple(cycle))
    cur = struct_normal(c)
    while True:
        st = merge_step(cur)
        if isinstance(st, Done):
            return st.term
        if isinstance(st, Stuck):  # unreachable on acyclic input
            raise AssertionError("merge stuck on an acyclic configuration")
        cur = st.term


def rewrite_normal_forms(c: Term, limit: int = 10_000) -> Iterator[Tuple[Tuple[str, ...], Term]]:
    """Every maximal rewrite sequence, as (elimination order, final term).

    Final terms still holding resources are stuck states.
    """
    stack = [((), struct_normal(c))]
    count = 0
    while stack and count < limit:
        order, t = stack.pop()
        ks = eligible(t)
        if not ks:
            count += 1
            yield order, t
            continue
        for k in reversed(ks):
            stack.append((order + (k,), eliminate(t, k)))
