import pytest

from hopi.grammar import parse, show
from hopi.lts import BIN, BOUT, IN, OUT, TIN, TOUT, Label, TypedNode, derive_transitions
from hopi.reduction import barbs, housekeeping_closure, reduce_step, struct_equiv, struct_normal
from hopi.syntax import Abs, Chan, Match, Name, NIL, UNIT, UNIT_VAL, Var, is_balanced
from hopi.translation import (
    FreshnessViolation, context_env, internal_choice, not_in_test, probe_label, succ_process,
    translate_config, translate_env,
)
from hopi.translation import (
    testing_context as make_context,
)
from hopi.typecheck import Env, TypeCheckError, check_config, well_typed

import suites

CU = Chan(UNIT)


def test_translate_env_examples():
    assert translate_env({}) == {}
    assert translate_env({"k": UNIT}) == {"k": CU}
    assert translate_env({"k": Abs(UNIT)}) == {"k": Chan(Abs(UNIT))}


def test_translate_call():
    got = translate_config({"k": UNIT}, parse("call k (())", triggers={"k"}))
    assert struct_equiv(got, parse(r"(\x:unit -> k!<x>.0)(())"))


def test_translate_resource():
    theta = {"k": Abs(UNIT)}
    got = translate_config(theta, parse(r"res k <= \x:abs<unit> -> x(())", triggers=theta))
    assert got == parse(r"!k?(y:abs<unit>).(\x:abs<unit> -> x(()))(y)")


def test_translation_is_homomorphic_on_plain_terms():
    p = parse("a!<()>.0 | nu n:ch<unit>.(n?(x:unit).0)")
    assert translate_config({}, p) == p


def test_translation_rejects_ill_typed_input():
    with pytest.raises(TypeCheckError):
        translate_config({"k": UNIT}, parse("call k (a)", triggers={"k"}), delta={"a": CU})


@pytest.mark.parametrize("delta, theta, c", suites.balanced_configs(), ids=lambda x: "")
def test_translation_is_typable(delta, theta, c):
    check_config(Env.of({**delta, **translate_env(theta)}), translate_config(theta, c, delta))


def test_succ_process_examples():
    assert succ_process({}, "succ") == parse("succ!<()>.0")
    assert succ_process({"b": CU}, "succ") == parse("succ!<b>.0")
    with pytest.raises(ValueError):
        succ_process({"b": CU, "c": CU}, "succ")


def test_internal_choice_reduces_to_either_branch():
    p, q = parse("a!<()>.0"), parse("b!<()>.0")
    choice = internal_choice(p, q)
    steps = reduce_step(choice)
    assert len(steps) == 2
    env = Env.of({"a": CU, "b": CU})
    assert sorted(tuple(barbs(env, s.target, 1)) for s in steps) == [("a",), ("b",)]
    # after the beta step the losing branch is left blocked on the private channel
    outcomes = {struct_normal(t.target) for s in steps for t in reduce_step(s.target) if t.rule == "Beta"}
    assert outcomes == {
        struct_normal(parse("a!<()>.0 | nu c:ch<unit>.(c?(x:unit).b!<()>.0)")),
        struct_normal(parse("b!<()>.0 | nu c:ch<unit>.(c?(x:unit).a!<()>.0)")),
    }


def test_internal_choice_same_branches():
    p = parse("a!<()>.0")
    for s in reduce_step(internal_choice(p, p)):
        env = Env.of({"a": CU})
        assert barbs(env, s.target, 1) == {"a"}


def test_not_in_test_examples():
    then_p, else_p = parse("a!<()>.0"), NIL
    assert not_in_test("x", [], then_p, else_p) == then_p
    assert not_in_test("x", ["a"], then_p, else_p) == Match(Var("x"), Name("a"), else_p, then_p)
    nested = not_in_test("x", ["a", "b", "c"], then_p, else_p)
    depth = 0
    while isinstance(nested, Match):
        depth += 1
        nested = nested.orelse
    assert depth == 3 and nested == then_p


DELTA = {"a": CU, "c": Chan(CU), "f": Chan(Abs(UNIT))}

ROWS = [
    (Label(IN, "a", UNIT_VAL), "a!<()>.succ!<()>.0"),
    (Label(OUT, "a", UNIT_VAL), "a?(x:unit).succ!<()>.0"),
    (Label(OUT, "c", Name("a")), "c?(x:ch<unit>).if x = a then succ!<()>.0 else 0"),
    (Label(BIN, "c", None, "b0"), "nu b0:ch<unit>.(c!<b0>.succ!<b0>.0)"),
    (Label(BOUT, "c", None, "b0"), "c?(x:ch<unit>).if x = a then 0 else succ!<x>.0"),
    (Label(TIN, "f", None, "k0"), r"f!<\x:unit -> k0!<x>.0>.succ!<()>.0"),
    (Label(TOUT, "f", None, "k0"), "f?(x:abs<unit>).(!k0?(y:unit).x(y) | succ!<()>.0)"),
]


@pytest.mark.parametrize("lab, text", ROWS, ids=lambda x: str(x) if isinstance(x, Label) else "")
def test_testing_context_rows(lab, text):
    ctx = make_context(DELTA, {}, lab, "succ", "dead")
    assert struct_equiv(ctx, parse(text))
    check_config(context_env(DELTA, {}, lab, "succ", "dead"), ctx)
    assert "dead" not in show(ctx)


def test_bound_output_row_compares_against_trigger_channels():
    # trigger j carries unit, so its translated channel has the payload type ch<unit>
    theta = {"j": UNIT}
    ctx = make_context({"c": Chan(CU)}, theta, Label(BOUT, "c", None, "b0"))
    assert ctx == parse("c?(x:ch<unit>).if x = j then 0 else succ!<x>.0")


@pytest.mark.parametrize("succ, dead, fresh", [("a", "dead", ""), ("succ", "succ", ""), ("s", "d", "a")])
def test_freshness_violations(succ, dead, fresh):
    kind = BIN if fresh else IN
    lab = Label(kind, "a", None if fresh else UNIT_VAL, fresh)
    with pytest.raises(FreshnessViolation):
        make_context({"a": CU}, {}, lab, succ, dead)


def test_probe_higher_order_output():
    d = parse(r"f!<\x:unit -> 0>.0")
    r = probe_label(DELTA, {}, d, Label(TOUT, "f", None, "k0"))
    assert r.reached and r.factorization_found and not r.dead_barbed
    expected = parse(r"!k0?(y:unit).(\x:unit -> 0)(y)")
    assert struct_normal(expected) in housekeeping_closure(r.residue) | {r.residue}


def test_probe_on_nil_fails():
    for lab, _ in ROWS:
        r = probe_label(DELTA, {}, NIL, lab)
        assert not r.reached and not r.lts_enabled


def test_probe_resource_interrogation():
    theta = {"k": Abs(UNIT)}
    d = parse(r"res k <= \x:abs<unit> -> x(())", triggers=theta)
    r = probe_label({}, theta, d, Label(TIN, "k", None, "l0"))
    assert r.reached and r.factorization_found and r.lts_enabled
    assert r.to_json()["factorizationFound"] is True


def test_balanced_suite_nodes_translate_to_typed_terms_after_moves():
    for delta, theta, c in suites.balanced_configs():
        for lab, m in derive_transitions(TypedNode.make(delta, theta, c)):
            assert is_balanced(m.config)
            env = Env.of({**m.delta_map, **translate_env(m.theta_map)})
            assert well_typed(env, translate_config(m.theta_map, m.config))
