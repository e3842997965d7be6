from hypothesis import given
import pytest

from hopi.gen import BASE_DELTA
from hopi.grammar import parse
from hopi.lts import (
    BIN, BOUT, IN, OUT, TAU, TIN, TOUT, Label, TAU_LABEL, TypedNode, build_lts, complement, derive_transitions,
    parse_label, weak_after,
)
from hopi.reduction import reduce_step, struct_normal
from hopi.syntax import Abs, alpha_equiv, Chan, Name, NIL, Resource, UNIT, UNIT_VAL, is_balanced, resource_ids, subterms
from hopi.typecheck import well_typed

import suites
from strategies import closed_processes

A_UNIT = {"a": Chan(UNIT)}

ALL_LABELS = [
    Label(IN, "a", UNIT_VAL), Label(OUT, "a", Name("b")), Label(BIN, "a", None, "b0"),
    Label(BOUT, "a", None, "b0"), Label(TIN, "a", None, "k0"), Label(TOUT, "a", None, "k0"),
]


def node(delta, text, theta=None):
    theta = theta or {}
    return TypedNode.make(delta, theta, parse(text, triggers=theta))


def labels(n):
    return sorted(str(lab) for lab, _ in derive_transitions(n))


@pytest.mark.parametrize("lab", ALL_LABELS, ids=str)
def test_complement_is_an_involution(lab):
    assert complement(complement(lab)) == lab
    assert complement(lab).kind != lab.kind


def test_complement_examples():
    assert complement(Label(IN, "a", UNIT_VAL)) == Label(OUT, "a", UNIT_VAL)
    assert complement(Label(TOUT, "a", None, "k")) == Label(TIN, "a", None, "k")
    with pytest.raises(ValueError):
        complement(TAU_LABEL)


@pytest.mark.parametrize("lab", ALL_LABELS, ids=str)
def test_label_text_round_trip(lab):
    assert parse_label(str(lab)) == lab


def test_higher_order_output_stores_a_resource():
    n = node({"a": Chan(Abs(UNIT))}, r"a!<\x:unit -> 0>.0")
    ((lab, m),) = derive_transitions(n)
    assert str(lab) == "a!(k0)"
    assert m.theta_map == {"k0": UNIT}
    assert m.config == struct_normal(parse(r"res k0 <= \x:unit -> 0", triggers={"k0"}))


def test_resource_answers_base_input():
    n = node({}, r"res k <= \x:unit -> 0", {"k": UNIT})
    ((lab, m),) = derive_transitions(n)
    assert str(lab) == "k?()"
    expected = parse(r"(\x:unit -> 0)(()) | res k <= \x:unit -> 0", triggers={"k"})
    assert m.config == struct_normal(expected)


def test_trigger_call_emits_base_output():
    n = node({}, "call k (())", {"k": UNIT})
    ((lab, m),) = derive_transitions(n)
    assert str(lab) == "k!()"
    assert m.config == NIL


def test_higher_order_input_receives_a_trigger():
    n = node({"f": Chan(Abs(UNIT))}, "f?(x:abs<unit>).x(())")
    ((lab, m),) = derive_transitions(n)
    assert str(lab) == "f?(k0)"
    assert m.config == struct_normal(parse(r"(\x:abs<unit> -> x(()))(call k0)", triggers={"k0"}))


def test_first_order_input_candidates():
    n = node({"c": Chan(Chan(UNIT)), "a": Chan(UNIT), "b": Chan(UNIT)}, "c?(x:ch<unit>).x!<()>.0")
    assert labels(n) == ["(b0)c?b0", "c?a", "c?b"]


def test_private_name_is_extruded():
    n = node({"c": Chan(Chan(UNIT))}, "nu n:ch<unit>.(c!<n>.n?(z:unit).0)")
    ((lab, m),) = derive_transitions(n)
    assert str(lab) == "(b0)c!b0"
    assert m.delta_map["b0"] == Chan(UNIT)


def test_restricted_subjects_stay_silent():
    assert derive_transitions(node(A_UNIT, "nu n:ch<unit>.(n!<()>.0)")) == ()


def test_weak_after_examples():
    nil = TypedNode.make({}, {}, NIL)
    assert weak_after(nil, TAU_LABEL).nodes == [nil]
    n = node({"a": Chan(UNIT), "b": Chan(UNIT)}, "b!<()>.0 | b?(x:unit).a!<()>.0")
    assert weak_after(n, Label(OUT, "a", UNIT_VAL)).nodes
    for lab, m in derive_transitions(n):
        assert m in weak_after(n, lab).nodes


def test_build_lts_examples():
    g = build_lts(TypedNode.make({}, {}, NIL), 3)
    assert len(g.nodes) == 1 and g.edges == [] and not g.truncated
    g = build_lts(node(A_UNIT, "a!<()>.0"), 3)
    assert len(g.nodes) == 2 and [str(l) for _, l, _ in g.edges] == ["a!()"]


def test_resource_lts_at_depth_one():
    theta = {"k": Chan(UNIT)}
    n = node({"a": Chan(UNIT), "b": Chan(UNIT)}, r"res k <= \x:ch<unit> -> x!<()>.0", theta)
    g = build_lts(n, 1)
    assert sorted(str(l) for _, l, _ in g.edges) == ["(b0)k?b0", "k?a", "k?b"]
    assert g.truncated


def test_lts_json_shape():
    data = build_lts(node(A_UNIT, "a!<()>.0"), 2).to_json()
    assert data["root"] == 0
    assert data["edges"] == [{"src": 0, "label": "a!()", "dst": 1}]
    assert set(data["nodes"][0]) == {"id", "delta", "theta", "term"}


def _suite_nodes():
    out = []
    for fam in suites.FAMILIES:
        for text in fam.left + fam.right:
            out.append(TypedNode.make(fam.delta, fam.theta, fam.parse(text)))
    for delta, theta, c in suites.balanced_configs():
        out.append(TypedNode.make(delta, theta, c))
    return out


def _edges():
    for root in _suite_nodes():
        yield from build_lts(root, 2, 200).edges


EDGES = list(_edges())


def _check_edge(src, lab, dst):
    assert well_typed(dst.env(), dst.config)
    grown = (set(dst.delta_map) | set(dst.theta_map)) - (set(src.delta_map) | set(src.theta_map))
    assert set(src.delta_map) <= set(dst.delta_map) and set(src.theta_map) <= set(dst.theta_map)
    assert len(grown) <= (1 if lab.visible else 0)
    if lab.fresh:
        assert lab.fresh not in src.used() and grown == {lab.fresh}
    assert resource_ids(src.config) <= resource_ids(dst.config)
    stored = [s for s in subterms(dst.config) if isinstance(s, Resource)]
    for r in subterms(src.config):
        if isinstance(r, Resource):
            assert any(s.k == r.k and alpha_equiv(s.value, r.value) for s in stored)


def test_suite_edges_are_well_formed():
    assert len(EDGES) > 200
    for src, lab, dst in EDGES:
        _check_edge(src, lab, dst)


def test_balance_is_preserved():
    for src, lab, dst in EDGES:
        if is_balanced(src.config):
            assert is_balanced(dst.config)


@given(closed_processes(max_depth=4))
def test_generated_edges_are_well_formed(t):
    for src, lab, dst in build_lts(TypedNode.make(BASE_DELTA, {}, t), 2, 100).edges:
        _check_edge(src, lab, dst)


@given(closed_processes(max_depth=4))
def test_tau_edges_are_reductions(t):
    n = TypedNode.make(BASE_DELTA, {}, t)
    taus = {m.config for lab, m in derive_transitions(n) if lab.kind == TAU}
    assert taus == {TypedNode.make(BASE_DELTA, {}, s.target).config for s in reduce_step(n.config)}
