"""Bounded weak bisimulation game with distinguishing witnesses.

The attacker picks a strong move on either side; the defender answers with
a weak move carrying the same label. A verdict is qualified by the number
of rounds explored and by whether some budget cut the search short.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .grammar import show
from .lts import TAU, Label, TypedNode, derive_transitions, tau_closure, transitions_with, weak_after
from .syntax import Term, TypeExpr
from .typecheck import Env, check_config


class MismatchedEnvironments(ValueError):
    pass


@dataclass(frozen=True)
class WitnessStep:
    """At ``pair``, ``side`` moves by ``label`` to ``target``; each defender
    response is refuted by its own sub-witness."""

    pair: Tuple[TypedNode, TypedNode]
    side: str
    label: Label
    target: TypedNode
    responses: Tuple[Tuple[TypedNode, "WitnessStep"], ...]

    def length(self) -> int:
        return 1 + max((w.length() for _, w in self.responses), default=0)

    def to_json(self) -> dict:
        return {
            "label": str(self.label),
            "side": self.side,
            "pair": [self.pair[0].key, self.pair[1].key],
            "target": self.target.key,
            "responses": [{"node": n.key, "witness": [w.to_json()]} for n, w in self.responses],
        }


@dataclass(frozen=True)
class EquivalentToDepth:
    depth: int
    truncated: bool

    def to_json(self) -> dict:
        return {"verdict": "equivalent", "depth": self.depth, "truncated": self.truncated, "witness": []}


@dataclass(frozen=True)
class Distinguished:
    witness: WitnessStep
    depth: int

    def to_json(self) -> dict:
        return {"verdict": "distinguished", "depth": self.depth, "truncated": False,
                "witness": [self.witness.to_json()]}


Verdict = Union[EquivalentToDepth, Distinguished]


def _responses(node: TypedNode, label: Label, budget: int):
    if label.kind == TAU:
        return tau_closure(node, budget)
    return weak_after(node, label, budget)


class _Game:
    def __init__(self, tau_budget: int):
        self.budget = tau_budget
        self.equiv: Dict[Tuple[TypedNode, TypedNode, int], bool] = {}
        self.dist: Dict[Tuple[TypedNode, TypedNode], WitnessStep] = {}

    def play(self, n: TypedNode, m: TypedNode, d: int) -> Tuple[Optional[WitnessStep], bool]:
        """(witness, truncated) for at most ``d`` more rounds."""
        if n == m:
            return None, False
        if (n, m) in self.dist:
            w = self.dist[(n, m)]
            if w.length() <= d:
                return w, False
        if d == 0:
            return None, bool(derive_transitions(n) or derive_transitions(m))
        key = (n, m, d)
        if key in self.equiv:
            return None, self.equiv[key]
        truncated = False
        for side, a, b in (("left", n, m), ("right", m, n)):
            for lab, a2 in derive_transitions(a):
                weak = _responses(b, lab, self.budget)
                refuted: List[Tuple[TypedNode, WitnessStep]] = []
                matched = False
                for b2 in weak.nodes:
                    pair = (a2, b2) if side == "left" else (b2, a2)
                    w, t = self.play(pair[0], pair[1], d - 1)
                    if w is None:
                        matched = True
                        truncated |= t
                        break
                    refuted.append((b2, w))
                if matched:
                    continue
                if weak.truncated:
                    truncated = True
                    continue
                step = WitnessStep((n, m), side, lab, a2, tuple(refuted))
                self.dist[(n, m)] = step
                return step, False
        self.equiv[key] = truncated
        return None, truncated


def bisim_check(n: TypedNode, m: TypedNode, depth: int = 4, tau_budget: int = 200) -> Verdict:
    """Play the weak bisimulation game up to ``depth`` rounds.

    Iterative deepening makes any witness one of minimal length.
    """
    if n.delta != m.delta or n.theta != m.theta:
        raise MismatchedEnvironments(f"{n.key!r} vs {m.key!r}")
    game = _Game(tau_budget)
    truncated = False
    for d in range(1, depth + 1):
        w, truncated = game.play(n, m, d)
        if w is not None:
            return Distinguished(w, d)
        if not truncated:
            break
    return EquivalentToDepth(depth, truncated)


def bisim_closed_hopi(delta: Mapping[str, TypeExpr], p: Term, q: Term, depth: int = 4,
                      tau_budget: int = 200) -> Verdict:
    env = Env.of(delta)
    check_config(env, p)
    check_config(env, q)
    return bisim_check(TypedNode.make(delta, {}, p), TypedNode.make(delta, {}, q), depth, tau_budget)


def replay_witness(w: WitnessStep, tau_budget: int = 200) -> bool:
    """Re-derive every move and every defender response of ``w``."""
    n, m = w.pair
    a, b = (n, m) if w.side == "left" else (m, n)
    if w.target not in transitions_with(a, w.label):
        return False
    weak = _responses(b, w.label, tau_budget)
    if weak.truncated:
        return False
    recorded = dict(w.responses)
    if set(recorded) != set(weak.nodes):
        return False
    for b2, sub in w.responses:
        expect = (w.target, b2) if w.side == "left" else (b2, w.target)
        if sub.pair != expect or not replay_witness(sub, tau_budget):
            return False
    return True


def explain_witness(w: WitnessStep, indent: int = 0) -> str:
    pad = "  " * indent
    other = "right" if w.side == "left" else "left"
    lines = [
        f"{pad}at   {show(w.pair[0].config)}  ~  {show(w.pair[1].config)}",
        f"{pad}{w.side} moves {w.label} to {show(w.target.config)}",
    ]
    if not w.responses:
        lines.append(f"{pad}{other} has no weak {w.label} move")
    else:
        lines.append(f"{pad}{other} answers in {len(w.responses)} way(s), each refuted:")
        for node, sub in w.responses:
            lines.append(f"{pad}- {show(node.config)}")
            lines.append(explain_witness(sub, indent + 1))
    return "\n".join(lines)


def verdict_json(v: Verdict) -> str:
    return json.dumps(v.to_json(), indent=2)
