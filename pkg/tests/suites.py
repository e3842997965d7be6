"""Curated configuration families shared by the module and acceptance tests."""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from hopi.grammar import parse, parse_type
from hopi.syntax import Term, TypeExpr, is_balanced


def env(**kw) -> Dict[str, TypeExpr]:
    return {k: parse_type(v) for k, v in kw.items()}


@dataclass
class Family:
    name: str
    delta: Dict[str, TypeExpr]
    theta: Dict[str, TypeExpr]
    left: List[str]
    right: List[str]

    def parse(self, text: str) -> Term:
        return parse(text, triggers=self.theta)

    def pairs(self) -> List[Tuple[Term, Term]]:
        return [(self.parse(c), self.parse(d)) for c in self.left for d in self.right]


# Complementary label classes: higher-order channel, higher-order trigger,
# first-order channel (free and bound names), first-order trigger.
HO_CHANNEL = Family(
    "ho-channel",
    env(a="ch<abs<unit>>", b="ch<unit>"),
    {},
    [
        r"a?(x:abs<unit>).x(())",
        r"a?(x:abs<unit>).(x(()) | x(()))",
        r"a?(x:abs<unit>).b!<()>.x(())",
        r"!a?(x:abs<unit>).x(())",
        r"a?(x:abs<unit>).0",
    ],
    [
        r"a!<\y:unit -> b!<()>.0>.0",
        r"a!<\y:unit -> 0>.b!<()>.0",
        r"nu n:ch<unit>.(a!<\y:unit -> n!<()>.0>.n?(z:unit).b!<()>.0)",
    ],
)

HO_TRIGGER = Family(
    "ho-trigger",
    env(b="ch<unit>"),
    env(k="abs<unit>", m="unit"),
    [
        r"res k <= \x:abs<unit> -> x(())",
        r"res k <= \x:abs<unit> -> (x(()) | b!<()>.0)",
        r"res k <= \x:abs<unit> -> b?(z:unit).x(())",
    ],
    [
        r"call k (\y:unit -> b!<()>.0)",
        r"call k (\y:unit -> 0) | b!<()>.0",
        r"b?(z:unit).0 | call k (\y:unit -> b!<()>.0)",
        r"res m <= \y:unit -> b!<()>.0 | call k (call m)",
    ],
)

FO_CHANNEL = Family(
    "fo-channel",
    env(a="ch<unit>", b="ch<unit>", e="ch<ch<unit>>"),
    {},
    [
        r"a?(x:unit).b!<()>.0",
        r"!a?(x:unit).0",
        r"e?(x:ch<unit>).x!<()>.0",
        r"e?(x:ch<unit>).if x = b then b!<()>.0 else 0",
    ],
    [
        r"a!<()>.0",
        r"a!<()>.b!<()>.0",
        r"e!<b>.0",
        r"e!<a>.0",
        r"nu n:ch<unit>.(e!<n>.n?(z:unit).0)",
    ],
)

FO_TRIGGER = Family(
    "fo-trigger",
    env(b="ch<unit>"),
    env(k="unit", j="ch<unit>"),
    [
        r"res k <= \x:unit -> b!<()>.0",
        r"res k <= \x:unit -> 0",
        r"res j <= \x:ch<unit> -> x!<()>.0",
        r"res j <= \x:ch<unit> -> if x = b then b!<()>.0 else 0",
    ],
    [
        r"call k (())",
        r"call k (()) | b?(z:unit).0",
        r"call j (b)",
        r"nu n:ch<unit>.(call j (n) | n?(z:unit).b!<()>.0)",
    ],
)

FAMILIES = [HO_CHANNEL, HO_TRIGGER, FO_CHANNEL, FO_TRIGGER]


def interacting_pairs():
    """(family, C, D) triples; only pairs that can actually interact are kept."""
    from hopi.lts import TypedNode, complement, derive_transitions

    out = []
    for fam in FAMILIES:
        for c, d in fam.pairs():
            nc = TypedNode.make(fam.delta, fam.theta, c)
            nd = TypedNode.make(fam.delta, fam.theta, d)
            labels_c = {lab for lab, _ in derive_transitions(nc) if lab.visible}
            labels_d = {lab for lab, _ in derive_transitions(nd) if lab.visible}
            if any(complement(l) in labels_d for l in labels_c):
                out.append((fam, c, d))
    return out


def balanced_configs():
    """(delta, theta, C) for every balanced side of the families plus extras."""
    seen = set()
    out = []
    for fam in FAMILIES:
        for text in fam.left + fam.right:
            c = fam.parse(text)
            if is_balanced(c) and (fam.name, text) not in seen:
                seen.add((fam.name, text))
                out.append((fam.delta, fam.theta, c))
    extra = Family(
        "mixed",
        env(a="ch<unit>", b="ch<unit>", f="ch<abs<unit>>"),
        env(k="unit", h="abs<unit>"),
        [
            r"res k <= \x:unit -> a!<()>.0 | call h (\y:unit -> b!<()>.0)",
            r"f?(x:abs<unit>).x(()) | f!<call k>.0",
            r"f!<\y:unit -> call k (y)>.0",
            r"res h <= \x:abs<unit> -> x(()) | a?(z:unit).call k (())",
            r"nu n:ch<unit>.(n!<()>.0 | n?(z:unit).call k (()))",
            r"a!<()>.0 | a?(z:unit).f!<\y:unit -> call k (())>.0",
            r"!a?(z:unit).call k (())",
            r"f?(x:abs<unit>).(x(()) | x(()))",
            r"if a = b then call k (()) else b!<()>.0",
        ],
        [],
    )
    for text in extra.left:
        out.append((extra.delta, extra.theta, extra.parse(text)))
    return out + lts_derived_configs()


def lts_derived_configs(limit: int = 30):
    """Balanced nodes reached by transitions from interacting plain HOpi systems.

    These mix trigger calls, resources and pending redexes.
    """
    from hopi.lts import TypedNode, build_lts
    from hopi.reduction import reduce_step
    from hopi.syntax import par, resource_ids, trigger_calls

    out, seen = [], set()
    for fam in (HO_CHANNEL, FO_CHANNEL):
        for c, d in fam.pairs():
            graph = build_lts(TypedNode.make(fam.delta, {}, par(c, d)), 2, 80)
            for n in graph.nodes:
                if n.key in seen or not is_balanced(n.config):
                    continue
                if not (trigger_calls(n.config) or resource_ids(n.config)) or not reduce_step(n.config):
                    continue
                seen.add(n.key)
                out.append((n.delta_map, n.theta_map, n.config))
                if len(out) >= limit:
                    return out
    return out


BISIM_DELTA = env(a="ch<unit>", b="ch<unit>", c="ch<ch<unit>>", f="ch<abs<unit>>")

INEQUIVALENT = [
    ("a!<()>.0", "b!<()>.0"),
    ("a!<()>.0", "0"),
    ("a?(x:unit).0", "0"),
    ("a!<()>.b!<()>.0", "b!<()>.a!<()>.0"),
    ("a!<()>.0 | b!<()>.0", "a!<()>.b!<()>.0"),
    (r"f!<\x:unit -> 0>.0", r"f!<\x:unit -> a!<()>.0>.0"),
    (r"f!<\x:unit -> a!<()>.0>.0", r"f!<\x:unit -> b!<()>.0>.0"),
    (r"f!<\x:unit -> a!<()>.a!<()>.0>.0", r"f!<\x:unit -> a!<()>.0>.0"),
    ("f?(x:abs<unit>).x(())", "f?(x:abs<unit>).0"),
    ("f?(x:abs<unit>).(x(()) | x(()))", "f?(x:abs<unit>).x(())"),
    ("c?(x:ch<unit>).if x = a then b!<()>.0 else 0", "c?(x:ch<unit>).b!<()>.0"),
    ("c?(x:ch<unit>).if x = a then b!<()>.0 else 0", "c?(x:ch<unit>).if x = b then b!<()>.0 else 0"),
    ("nu n:ch<unit>.(c!<n>.0)", "c!<a>.0"),
    ("c!<a>.0", "c!<b>.0"),
    ("if a = b then a!<()>.0 else 0", "a!<()>.0"),
    ("a?(x:unit).a!<()>.0", "a?(x:unit).b!<()>.0"),
    ("nu n:ch<unit>.(n!<()>.0 | n?(x:unit).a!<()>.0 | n?(x:unit).b!<()>.0)", "a!<()>.0"),
    ("!a?(x:unit).b!<()>.0", "a?(x:unit).b!<()>.0"),
]

EQUIVALENT = [
    ("nu n:ch<unit>.(n!<()>.0)", "0"),
    (r"f!<\x:unit -> 0>.0", r"f!<\x:unit -> (0 | 0)>.0"),
    ("a!<()>.0", "nu n:ch<unit>.(n!<()>.0 | n?(x:unit).a!<()>.0)"),
    (r"(\x:unit -> a!<()>.0)(())", "a!<()>.0"),
    ("if a = a then b!<()>.0 else 0", "b!<()>.0"),
    ("!a?(x:unit).0", "!a?(x:unit).0 | a?(y:unit).0"),
    (r"f!<\x:unit -> a!<()>.0>.0", r"f!<\x:unit -> (\y:unit -> a!<()>.0)(x)>.0"),
    ("c?(x:ch<unit>).x!<()>.0", "c?(y:ch<unit>).(\\z:ch<unit> -> z!<()>.0)(y)"),
]
