from __future__ import annotations

import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procid.causal import realization_facts
from procid.classification import classify_simple
from procid.compositional import (
    CRITERIA,
    apply_a1,
    apply_a2,
    apply_a3,
    apply_gdc_axiom,
    new_state,
    rule_table,
    saturate,
)
from procid.core_model import KBError, fact, rebuild

from conftest import kb_of, load
from oracle import naive_saturate, random_kb

# ---------------------------------------------------------------------------
# brute-force models: every partition of a few entities that satisfies the
# criterion's biconditional and the asserted (dis)equalities
# ---------------------------------------------------------------------------


def partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def models(ids, constraint):
    for part in partitions(list(ids)):
        block = {x: i for i, b in enumerate(part) for x in b}
        if constraint(block):
            yield block


def forced(ids, constraint, a, b):
    """'eq' / 'neq' if every model agrees on a ~ b, else None."""
    seen = {m[a] == m[b] for m in models(ids, constraint)}
    if seen == {True}:
        return "eq"
    if seen == {False}:
        return "neq"
    return None


A1_KB = """
entity x : MaterialEntity
entity q1 : Quality
entity q2 : Quality
entity p1 : SDCChange
entity p2 : SDCChange
entity t : TemporalRegion
fact INH(q1, x)
fact INH(q2, x)
fact PSDC(p1, q1)
fact PSDC(p2, q2)
fact OTR(p1, t)
fact OTR(p2, t)
"""


def a1_models(extra):
    def ok(m):
        if (m["p1"] == m["p2"]) != (m["q1"] == m["q2"]):
            return False
        return extra(m)

    return ok


def test_a1_merge_on_same_quality_and_time():
    kb = kb_of(A1_KB + "eq(q1, q2)\n")
    state, diags = saturate(kb)
    assert state.same("p1", "p2")
    assert any(d.code == "DERIVED_EQ" and d.axiom == "A1" for d in diags)


def test_a1_equal_extents_count_as_same_time():
    text = A1_KB.replace("fact OTR(p2, t)", "fact OTR(p2, u)") + "entity u : TemporalRegion\ninterval t = [0, 1]\ninterval u = [0, 1]\neq(q1, q2)\n"
    state, _ = saturate(kb_of(text))
    assert state.same("p1", "p2") and state.same("t", "u")


def test_a1_contrapositive_matches_brute_force():
    kb = kb_of(A1_KB + "neq(q1, q2)\n")
    ids = ["p1", "p2", "q1", "q2"]
    assert forced(ids, a1_models(lambda m: m["q1"] != m["q2"]), "p1", "p2") == "neq"
    state = new_state(kb)
    state.add_neq("q1", "q2", "ASSERT")
    diags = apply_a1(kb, state)
    assert [(d.code, d.subjects) for d in diags] == [("DERIVED_NEQ", ("p1", "p2"))]


def test_a1_no_unique_names():
    kb = kb_of(A1_KB)
    state, _ = saturate(kb)
    assert not state.same("p1", "p2") and not state.distinct("p1", "p2")
    assert forced(["p1", "p2", "q1", "q2"], a1_models(lambda m: True), "p1", "p2") is None


def test_a1_leftward_through_functionality():
    state, _ = saturate(kb_of(A1_KB + "eq(p1, p2)\n"))
    assert state.same("q1", "q2")


def test_a1_reflexive_pair_adds_nothing(sphere):
    state = new_state(sphere)
    assert apply_a1(sphere, state) == []


A2_KB = """
entity a : MaterialEntity
entity b : MaterialEntity
entity r1 : SpatialChange
entity r2 : SpatialChange
entity t : TemporalRegion
entity u : TemporalRegion
fact OTR(r1, t)
fact PCSP(a, r1)
fact PCSP(a, r2)
"""


def test_a2_same_participants_same_time():
    kb = kb_of(A2_KB + "fact OTR(r2, t)\n")
    state, diags = saturate(kb)
    assert state.same("r1", "r2")
    assert any(d.axiom == "A2" for d in diags)


def test_a2_distinct_times():
    kb = kb_of(A2_KB + "fact OTR(r2, u)\nneq(t, u)\n")
    state = new_state(kb)
    state.add_neq("t", "u", "ASSERT")
    diags = apply_a2(kb, state)
    assert [d.subjects for d in diags] == [("r1", "r2")]
    assert "NEQ(t,u)" in diags[0].premises


def test_a2_participant_set_difference_matches_brute_force():
    kb = kb_of(A2_KB + "fact OTR(r2, t)\nfact PCSP(b, r2)\nneq(a, b)\n")

    def ok(m):
        sets_equal = {m["a"]} == {m["a"], m["b"]}
        return m["a"] != m["b"] and (m["r1"] == m["r2"]) == sets_equal

    assert forced(["a", "b", "r1", "r2"], ok, "r1", "r2") == "neq"
    state, diags = saturate(kb)
    assert state.distinct("r1", "r2")
    a2 = [d for d in diags if d.axiom == "A2"]
    assert a2 and "NEQ(a,b)" in a2[0].premises


AGG_KB = """
entity s1 : MaterialEntity
entity temperature1 : Quality
entity p_heat : SDCChange
entity p_heat2 : SDCChange
entity p_rot : SpatialChange
entity p_spin : SpatialChange
entity p_agg1 : Process
entity p_agg2 : Process
entity t : TemporalRegion
fact INH(temperature1, s1)
fact PSDC(p_heat, temperature1)
fact PCSP(s1, p_rot)
fact PCSP(s1, p_spin)
fact SUM(p_agg1, p_rot, p_heat)
"""


def test_a3_shared_witness_merges():
    kb = kb_of(AGG_KB + "fact SUM(p_agg2, p_rot, p_heat)\n")
    state = new_state(kb)
    diags = apply_a3(kb, state)
    assert [(d.code, d.subjects, d.axiom) for d in diags] == [("DERIVED_EQ", ("p_agg1", "p_agg2"), "A3")]


def test_a3_neq_distinct_witness_flips():
    kb = kb_of(AGG_KB + "fact SUM(p_agg2, p_spin, p_heat)\nneq(p_rot, p_spin)\n")
    state, diags = saturate(kb)
    assert state.distinct("p_agg1", "p_agg2")
    hit = [d for d in diags if d.axiom == "A3"]
    assert hit and "NEQ(p_rot,p_spin)" in hit[0].premises


def test_a3_second_pass_after_a1():
    text = AGG_KB + """
fact PSDC(p_heat2, temperature1)
fact OTR(p_heat, t)
fact OTR(p_heat2, t)
fact SUM(p_agg2, p_rot, p_heat2)
"""
    kb = kb_of(text)
    one = new_state(kb)
    assert apply_a3(kb, one) == []  # nothing yet: the heatings are not known to be one
    state, diags = saturate(kb)
    assert state.same("p_heat", "p_heat2") and state.same("p_agg1", "p_agg2")
    axioms = [d.axiom for d in diags if d.code == "DERIVED_EQ"]
    assert axioms.index("A1") < len(axioms)


def test_gdc_axiom_and_gating():
    text = """
entity doc : GenericallyDependentContinuant
entity doc2 : GenericallyDependentContinuant
entity e1 : Process
entity e2 : Process
entity t : TemporalRegion
fact PGDC(e1, doc)
fact PGDC(e2, doc2)
fact OTR(e1, t)
fact OTR(e2, t)
"""
    kb = kb_of(text)
    with pytest.raises(KBError) as exc:
        apply_gdc_axiom(kb, new_state(kb))
    assert exc.value.code == "FLAG_REQUIRED"
    assert saturate(kb_of(text + "eq(doc, doc2)\n"))[0].same("e1", "e2") is False
    state, _ = saturate(kb_of(text + "eq(doc, doc2)\n", "extended-simple"))
    assert state.same("e1", "e2")
    state, _ = saturate(kb_of(text + "neq(doc, doc2)\n", "extended-simple"))
    assert state.distinct("e1", "e2")


def test_eq_and_neq_clash_is_a_contradiction():
    text = "entity p1 : Process\nentity p2 : Process\neq(p1, p2)\nneq(p1, p2)\n"
    _, diags = saturate(kb_of(text))
    assert [d.code for d in diags if d.code == "CONTRADICTION"] == ["CONTRADICTION"]


def test_driving_scenario_stays_apart(sphere):
    state, diags = saturate(sphere)
    assert not state.same("p_heat", "p_rot")
    assert not any(d.code == "CONTRADICTION" for d in diags)


def test_aggregate_corpus_never_merges_simple_processes():
    kb = load("aggregate.kb")
    state, _ = saturate(kb)
    simple = [p for p in kb.processes() if classify_simple(kb, p)]
    for a, b in combinations(simple, 2):
        assert not state.same(a, b)


def test_unknown_criterion_and_bad_order(sphere):
    with pytest.raises(KBError):
        rule_table(sphere, "vibes")
    with pytest.raises(ValueError):
        saturate(sphere, rule_order=["A1"])


# ---------------------------------------------------------------------------
# random KBs against the naive oracle
# ---------------------------------------------------------------------------

SEEDS = range(200)


def _shuffled_orders(kb, criterion, rng, n=5):
    names = list(rule_table(kb, criterion))
    for _ in range(n):
        rng.shuffle(names)
        yield list(names)


@pytest.mark.parametrize("criterion", CRITERIA)
def test_saturation_matches_naive_fixpoint(criterion):
    mismatches = []
    for seed in SEEDS:
        rng = random.Random(seed)
        kb = random_kb(rng)
        ref = naive_saturate(kb, criterion)
        for order in _shuffled_orders(kb, criterion, rng):
            state, _ = saturate(kb, criterion, order)
            if state.eq_classes() != ref.eq_classes() or state.neq_pairs() != ref.neq_pairs():
                mismatches.append((seed, order))
    assert mismatches == []


def _premise_ok(kb, state, premise, real_ids):
    if premise.startswith("interval("):
        return premise[9:-1] in kb.extents
    if premise.startswith(("EQ(", "NEQ(")) and state.holds(premise):
        return True
    return premise in real_ids


@pytest.mark.parametrize("seed", range(0, 200, 4))
def test_provenance_replays(seed):
    kb = random_kb(random.Random(seed))
    for criterion in CRITERIA:
        final, _ = saturate(kb, criterion)
        real_ids = {f.id for f in kb.facts} | {f.id for f in realization_facts(kb)}
        replay = new_state(kb)
        for d in final.derivations:
            for prem in d.premises:
                assert _premise_ok(kb, replay, prem, real_ids), (criterion, d, prem)
            assert replay.apply(d)
        assert replay.partition() == final.partition()


def test_saturation_is_idempotent():
    for seed in range(50):
        kb = random_kb(random.Random(seed))
        state, _ = saturate(kb)
        before = (state.partition(), state.neq_pairs(), len(state.derivations))
        from procid.compositional import Context, run_rules

        run_rules(Context(kb), state, rule_table(kb))
        assert (state.partition(), state.neq_pairs(), len(state.derivations)) == before


# Relations whose facts never shrink a closed-world set that a rule compares.
MONOTONE_RELATIONS = ("EQ", "NEQ", "OTR", "PSDC", "PGDC", "OSTR", "INH", "LOCATED_AT")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_adding_facts_never_removes_equalities(seed, rnd):
    kb = random_kb(random.Random(seed))
    ids = sorted(kb.entities)
    before, _ = saturate(kb)
    extra = []
    for _ in range(3):
        rel = rnd.choice(MONOTONE_RELATIONS)
        n = 3 if rel == "LOCATED_AT" else 2
        extra.append(fact(rel, *(rnd.choice(ids) for _ in range(n))))
    grown = kb
    for f in extra:
        try:
            grown = rebuild(grown, add=[f])
        except KBError:
            continue
    after, _ = saturate(grown)
    for x in ids:
        for y in ids:
            if before.same(x, y):
                assert after.same(x, y)
            if before.distinct(x, y):
                assert after.distinct(x, y)


def test_closed_world_sets_are_not_monotone():
    kb = kb_of(A2_KB + "fact OTR(r2, t)\n")
    assert saturate(kb)[0].same("r1", "r2")
    grown = rebuild(kb, add=[fact("PCSP", "b", "r2")])
    assert not saturate(grown)[0].same("r1", "r2")


ELEMS = list("abcdef")


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.sampled_from(ELEMS), min_size=1, max_size=3),
    st.lists(st.sampled_from(ELEMS), min_size=1, max_size=3),
    st.lists(st.tuples(st.sampled_from(ELEMS), st.sampled_from(ELEMS)), max_size=4),
    st.lists(st.tuples(st.sampled_from(ELEMS), st.sampled_from(ELEMS)), max_size=6),
)
def test_set_difference_matches_partition_brute_force(xs, ys, eqs, neqs):
    from oracle import NaiveState

    from procid.compositional import provably_differ
    from procid.state import DerivationState

    state, naive = DerivationState(ELEMS), NaiveState(ELEMS)
    for a, b in eqs:
        state.merge(a, b, "X")
        naive.merge(a, b)
    for a, b in neqs:
        state.add_neq(a, b, "X")
        naive.add_neq(a, b)
    assert provably_differ(state, xs, ys) == naive.differ(xs, ys)


@pytest.mark.parametrize("seed", range(0, 200, 5))
def test_contradiction_reported_iff_clash(seed):
    kb = random_kb(random.Random(seed))
    state, diags = saturate(kb)
    clash = any(state.same(a, b) for a, b in state.neq_pairs())
    assert clash == any(d.code == "CONTRADICTION" for d in diags)
