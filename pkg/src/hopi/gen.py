"""Seeded random generators for terms, types and merge instances.

Every generator takes an explicit ``random.Random``; ``rng_from_env``
builds one from ``HOPI_SEED`` so failing property runs can be replayed.
"""

from __future__ import annotations

import os
import random
from typing import Dict, Iterator, List, Mapping, Optional, Sequence

from .grammar import parse_type
from .syntax import (
    Abs,
    App,
    Chan,
    Input,
    Lambda,
    Match,
    Name,
    New,
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
    UNIT,
    UNIT_VAL,
    Unit,
    Var,
    free_names,
    fresh_ident,
    par,
    rename_names,
)
from .typecheck import head_normal, type_iso

DEFAULT_SEED = 20240601


def rng_from_env(offset: int = 0) -> random.Random:
    seed = int(os.environ.get("HOPI_SEED", DEFAULT_SEED))
    return random.Random(seed + offset)


T_UNIT = UNIT
T_CU = Chan(UNIT)
T_CCU = Chan(T_CU)
T_AU = Abs(UNIT)
T_CAU = Chan(T_AU)
T_REC = parse_type("rec Z. ch<Z>")

# a small environment with every payload shape the generator uses
BASE_DELTA: Dict[str, TypeExpr] = {
    "a": T_CU,
    "b": T_CU,
    "c": T_CCU,
    "f": T_CAU,
    "r": T_REC,
}


# --------------------------------------------------------------------------
# Types


def enumerate_types(depth: int, var: str = "Z", closed_only: bool = True) -> List[TypeExpr]:
    """All types of height at most ``depth`` over one type variable."""
    levels: List[List[TypeExpr]] = [[]]
    for d in range(1, depth + 1):
        prev = levels[-1]
        cur: List[TypeExpr] = [UNIT, TypeVar(var)]
        for t in prev:
            cur += [Chan(t), Abs(t), Rec(var, t)]
        levels.append(list(dict.fromkeys(cur)))
    from .syntax import free_type_vars
    from .typecheck import check_guarded_type

    out = [t for t in levels[-1] if check_guarded_type(t)]
    if closed_only:
        out = [t for t in out if not free_type_vars(t)]
    return out


# --------------------------------------------------------------------------
# Typed processes


class TermGen:
    """Random well-typed closed processes over a channel environment."""

    def __init__(self, rng: random.Random, delta: Mapping[str, TypeExpr] = BASE_DELTA,
                 replication: bool = True, matching: bool = True):
        self.rng = rng
        self.delta = dict(delta)
        self.replication = replication
        self.matching = matching
        self.counter = 0

    def _fresh_var(self) -> str:
        self.counter += 1
        return f"v{self.counter}"

    def _fresh_name(self, names) -> str:
        self.counter += 1
        return fresh_ident(f"n{self.counter}", names)

    def _channels(self, names, vars_, of: Optional[TypeExpr] = None) -> List[Term]:
        out: List[Term] = []
        for a, t in sorted(names.items()):
            if isinstance(head_normal(t), Chan) and (of is None or type_iso(t, of)):
                out.append(Name(a))
        for x, t in sorted(vars_.items()):
            if isinstance(head_normal(t), Chan) and (of is None or type_iso(t, of)):
                out.append(Var(x))
        return out

    def value(self, ty: TypeExpr, depth: int, names, vars_) -> Optional[Term]:
        h = head_normal(ty)
        if isinstance(h, Unit):
            return UNIT_VAL
        if isinstance(h, Chan):
            opts = self._channels(names, vars_, ty)
            return self.rng.choice(opts) if opts else None
        if isinstance(h, Abs):
            opts: List[Term] = [Var(x) for x, t in sorted(vars_.items()) if type_iso(t, ty)]
            if depth > 0 or not opts:
                x = self._fresh_var()
                body = self.proc(max(depth - 1, 0), names, {**vars_, x: h.arg})
                opts.append(Lambda(x, h.arg, body))
            return self.rng.choice(opts)
        return None

    def proc(self, depth: int, names: Optional[Mapping[str, TypeExpr]] = None,
             vars_: Optional[Mapping[str, TypeExpr]] = None) -> Term:
        names = dict(self.delta if names is None else names)
        vars_ = dict(vars_ or {})
        r = self.rng
        if depth <= 0:
            return self._leaf(names, vars_)
        kinds = ["out", "in", "comm", "comm", "par", "par", "nil", "app", "new"]
        if self.matching:
            kinds.append("match")
        if self.replication:
            kinds.append("repl")
        kind = r.choice(kinds)
        if kind == "nil":
            return NIL
        if kind == "par":
            return Par(self.proc(depth - 1, names, vars_), self.proc(depth - 1, names, vars_))
        if kind == "comm":
            # an output and an input facing each other on one channel
            subj = r.choice(self._channels(names, vars_))
            payload = self._payload_type(subj, names, vars_)
            v = self.value(payload, depth - 1, names, vars_)
            x = self._fresh_var()
            return Par(
                Output(subj, v, self.proc(depth - 1, names, vars_)),
                Input(subj, x, payload, self.proc(depth - 1, names, {**vars_, x: payload})),
            )
        if kind == "new":
            a = self._fresh_name(names)
            ty = r.choice([T_CU, T_CU, T_CCU, T_CAU])
            return New(a, ty, self.proc(depth - 1, {**names, a: ty}, vars_))
        if kind == "repl":
            chans = self._channels(names, vars_)
            if not chans:
                return NIL
            subj = r.choice(chans)
            payload = self._payload_type(subj, names, vars_)
            x = self._fresh_var()
            body = self.proc(min(depth - 1, 1), names, {**vars_, x: payload})
            return Repl(Input(subj, x, payload, body))
        if kind == "match":
            chans = self._channels(names, vars_)
            left = r.choice(chans)
            lt = names[left.id] if isinstance(left, Name) else vars_[left.id]
            right = r.choice(self._channels(names, vars_, lt))
            return Match(left, right, self.proc(depth - 1, names, vars_), self.proc(depth - 1, names, vars_))
        if kind == "app":
            x = self._fresh_var()
            arg_t = r.choice([T_UNIT, T_CU])
            fun = Lambda(x, arg_t, self.proc(depth - 1, names, {**vars_, x: arg_t}))
            arg = self.value(arg_t, 0, names, vars_)
            return App(fun, arg)
        chans = self._channels(names, vars_)
        subj = r.choice(chans)
        payload = self._payload_type(subj, names, vars_)
        if kind == "out":
            v = self.value(payload, depth - 1, names, vars_)
            return Output(subj, v, self.proc(depth - 1, names, vars_))
        x = self._fresh_var()
        return Input(subj, x, payload, self.proc(depth - 1, names, {**vars_, x: payload}))

    def _payload_type(self, subj: Term, names, vars_) -> TypeExpr:
        t = names[subj.id] if isinstance(subj, Name) else vars_[subj.id]
        return head_normal(t).payload

    def _leaf(self, names, vars_) -> Term:
        r = self.rng
        abs_vars = [x for x, t in sorted(vars_.items()) if isinstance(head_normal(t), Abs)]
        opts = ["nil", "out"]
        if abs_vars:
            opts.append("call")
        kind = r.choice(opts)
        if kind == "nil":
            return NIL
        if kind == "call":
            x = r.choice(abs_vars)
            arg = self.value(head_normal(vars_[x]).arg, 0, names, vars_)
            return App(Var(x), arg)
        unit_chans = self._channels(names, vars_, T_CU)
        if not unit_chans:
            return NIL
        return Output(r.choice(unit_chans), UNIT_VAL, NIL)


def random_closed_process(rng: random.Random, depth: int, **kw) -> Term:
    return TermGen(rng, **kw).proc(depth)


# --------------------------------------------------------------------------
# Structural-congruence perturbation


def perturb(rng: random.Random, p: Term, rounds: int = 3) -> Term:
    """Apply random structural laws that keep ``p`` congruent to itself."""
    for _ in range(rounds):
        p = _perturb_once(rng, p)
    return p


def _perturb_once(rng: random.Random, p: Term) -> Term:
    choice = rng.randrange(6)
    if isinstance(p, Par) and choice == 0:
        return Par(p.right, p.left)
    if isinstance(p, Par) and isinstance(p.left, Par) and choice == 1:
        return Par(p.left.left, Par(p.left.right, p.right))
    if choice == 2:
        return Par(p, NIL) if rng.random() < 0.5 else Par(NIL, p)
    if choice == 3:
        # alpha-rename a top restriction
        if isinstance(p, New):
            fresh = fresh_ident(p.name + "r", free_names(p.body) | {p.name})
            return New(fresh, p.name_type, rename_names(p.body, {p.name: fresh}))
        return p
    if choice == 4 and isinstance(p, Par) and isinstance(p.right, New):
        inner = p.right
        if inner.name not in free_names(p.left):
            return New(inner.name, inner.name_type, Par(p.left, inner.body))
        return p
    if choice == 5 and isinstance(p, Par):
        if rng.random() < 0.5:
            return Par(_perturb_once(rng, p.left), p.right)
        return Par(p.left, _perturb_once(rng, p.right))
    if isinstance(p, New):
        return New(p.name, p.name_type, _perturb_once(rng, p.body))
    return p


def unfold_one_replication(p: Term) -> Optional[Term]:
    """``!P | R`` to ``!P | P | R`` at the first replication in an evaluation context."""
    if isinstance(p, Repl):
        return Par(p, p.body)
    if isinstance(p, Par):
        left = unfold_one_replication(p.left)
        if left is not None:
            return Par(left, p.right)
        right = unfold_one_replication(p.right)
        if right is not None:
            return Par(p.left, right)
        return None
    if isinstance(p, New):
        body = unfold_one_replication(p.body)
        return New(p.name, p.name_type, body) if body is not None else None
    return None


# --------------------------------------------------------------------------
# Merge instances


def trigger_ids(n: int) -> List[str]:
    return [f"k{i}" for i in range(n)]


def merge_alphabet(ks: Sequence[str]) -> List[Term]:
    """Five abstraction shapes over the first three trigger identifiers."""
    k0, k1, k2 = (list(ks) + ["k0", "k0", "k0"])[:3]
    x = Var("x")
    return [
        Lambda("x", UNIT, NIL),
        Lambda("x", UNIT, App(TriggerCall(k0), x)),
        Lambda("x", UNIT, App(TriggerCall(k1), x)),
        Lambda("x", UNIT, App(TriggerCall(k2), x)),
        Lambda("x", UNIT, Par(App(TriggerCall(k0), x), Input(Name("a"), "y", UNIT, App(TriggerCall(k1), x)))),
    ]


def exhaustive_merge_configs(max_resources: int = 3) -> Iterator[Term]:
    """Every configuration storing alphabet values at a subset of ``k0..k2``."""
    import itertools

    ks = trigger_ids(3)
    alphabet = merge_alphabet(ks)
    bodies = [NIL, par(*(App(TriggerCall(k), UNIT_VAL) for k in ks))]
    for n in range(max_resources + 1):
        for chosen in itertools.combinations(ks, n):
            for values in itertools.product(alphabet, repeat=n):
                res = [Resource(k, v) for k, v in zip(chosen, values)]
                for body in bodies:
                    yield par(*res, body)


def random_merge_config(rng: random.Random, max_resources: int = 6, acyclic: Optional[bool] = None,
                        n_triggers: Optional[int] = None) -> Term:
    """Resources ``k_i <= \\x:unit -> ...`` calling random triggers.

    With ``acyclic=True`` calls only go to triggers later in a random order.
    """
    n = n_triggers or max_resources
    ks = trigger_ids(n)
    order = ks[:]
    rng.shuffle(order)
    stored = rng.sample(ks, rng.randint(0, max_resources))
    res = []
    for k in stored:
        if acyclic:
            pool = order[order.index(k) + 1:]
        else:
            pool = ks
        targets = [l for l in pool if rng.random() < 0.35]
        res.append(Resource(k, Lambda("x", UNIT, _call_body(rng, targets))))
    body = par(*(App(TriggerCall(k), UNIT_VAL) for k in ks if rng.random() < 0.5))
    return par(*res, body)


def _call_body(rng: random.Random, targets: Sequence[str]) -> Term:
    parts: List[Term] = []
    for l in targets:
        call = App(TriggerCall(l), Var("x"))
        r = rng.random()
        if r < 0.3:
            call = Input(Name("a"), "y", UNIT, call)
        elif r < 0.5:
            call = Output(Name("a"), UNIT_VAL, call)
        parts.append(call)
    if rng.random() < 0.3:
        parts.append(Output(Name("a"), Var("x"), NIL))
    return par(*parts)


def merge_theta(n: int = 6) -> Dict[str, TypeExpr]:
    return {k: UNIT for k in trigger_ids(n)}
