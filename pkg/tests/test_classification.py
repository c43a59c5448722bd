from __future__ import annotations

import pytest

from procid.classification import (
    aggregate_witnesses,
    check_a4,
    check_participation,
    check_pdh,
    classify_aggregate,
    classify_gdcc,
    classify_sdcc,
    classify_simple,
    classify_spatial,
    derived_categories,
    expand_qualities,
)
from procid.core_model import Category, KBError, fact, is_in_category, rebuild

from conftest import kb_of, load

C = Category


def test_sphere_processes_are_simple(sphere):
    assert classify_sdcc(sphere, "p_heat").provenance == ("PSDC(p_heat,temperature1)",)
    assert classify_spatial(sphere, "p_rot")
    assert not classify_spatial(sphere, "p_heat")
    assert classify_simple(sphere, "p_heat") and classify_simple(sphere, "p_rot")
    assert not classify_aggregate(sphere, "p_heat")


def test_spatial_change_derived_from_locations():
    text = """
entity ball : MaterialEntity
entity here : SpatialRegion
entity there : SpatialRegion
entity t1 : TemporalRegion
entity t2 : TemporalRegion
entity roll : Process
interval t1 = [0, 0]
interval t2 = [1, 1]
fact PCSP(ball, roll)
fact locatedAt(ball, here, t1)
fact locatedAt(ball, there, t2)
"""
    kb = kb_of(text)
    found = classify_spatial(kb, "roll")
    assert found and found.provenance == ("LOCATED_AT(ball,here,t1)", "LOCATED_AT(ball,there,t2)")
    derived = derived_categories(kb)
    assert derived["roll"].derived == {C.SPATIAL_CHANGE, C.SIMPLE_PROCESS}
    assert is_in_category(kb, "roll", C.SIMPLE_PROCESS, derived)
    # the same region twice is no motion
    kb2 = rebuild(kb, drop=[fact("LOCATED_AT", "ball", "there", "t2")], add=[fact("LOCATED_AT", "ball", "here", "t2")])
    assert not classify_spatial(kb2, "roll")


def test_gdc_change_only_with_flag():
    kb = load("document_gdc.kb")
    assert not classify_gdcc(kb, "p_revise")
    kb = load("document_gdc.kb", "extended-simple")
    assert classify_gdcc(kb, "p_revise")


def test_aggregates():
    kb = load("aggregate.kb")
    found = classify_aggregate(kb, "p_agg")
    assert found.provenance == ("SUM(p_agg,p_rot,p_heat)",)
    assert set(found.witnesses) == {"p_rot", "p_heat"}
    assert classify_aggregate(kb, "dinner") and classify_aggregate(kb, "rotting")
    assert check_pdh(kb) == []


def test_aggregate_witness_needs_two_distinct_simple_parts():
    text = """
entity q : Quality
entity x : MaterialEntity
entity a : SDCChange
entity b : Process
entity w : Process
entity v : Process
fact INH(q, x)
fact PSDC(a, q)
fact SUM(w, a, a)
fact SUM(v, a, b)
"""
    kb = kb_of(text)
    assert aggregate_witnesses(kb, "w") == []
    assert aggregate_witnesses(kb, "v") == []  # b is not simple
    assert [d.subjects for d in check_pdh(kb)] == [("b",), ("v",), ("w",)]


def test_classifiers_reject_non_processes(sphere):
    with pytest.raises(KBError) as exc:
        classify_sdcc(sphere, "s1")
    assert exc.value.code == "NOT_A_PROCESS"


def test_pdh_gating():
    plain = check_pdh(load("document_gdc.kb"))
    assert [d.code for d in plain] == ["PDH_VIOLATION"]
    assert "extended-simple" in plain[0].message
    assert plain[0].span is not None and plain[0].span.line == 7
    assert check_pdh(load("document_gdc.kb", "extended-simple")) == []


def test_a4_requires_realization_by_participant(sphere):
    assert check_a4(sphere) == []
    kb = rebuild(sphere, drop=[fact("REAL", "d_heat", "p_heat", "t12")])
    assert [d.subjects for d in check_a4(kb)] == [("p_heat",)]
    # a realization at a time with no participation does not count
    kb = rebuild(sphere, drop=[fact("PC", "s1", "p_heat", "t12")])
    assert [d.subjects for d in check_a4(kb)] == [("p_heat",)]


def test_a4_accepts_equal_extent_times(sphere):
    text = """
entity x : MaterialEntity
entity d : Disposition
entity p : Process
entity t : TemporalRegion
entity u : TemporalRegion
interval t = [0, 1]
interval u = [0, 1]
fact INH(d, x)
fact PC(x, p, t)
fact REAL(d, p, u)
"""
    assert check_a4(kb_of(text)) == []


def test_participation_flag(sphere):
    assert check_participation(sphere) == []
    strict = load("sphere.kb", "strict-participation")
    assert [d.subjects for d in check_participation(strict)] == [("p_heat",)]


def test_quality_expansion_on_apple():
    kb = load("apple_pqe.kb")
    new, mapping = expand_qualities(kb)
    assert mapping == {"color_s0@apple0": "color_s0"}
    assert fact("INH", "color_s0@apple0", "apple0") in new
    assert fact("CORRESPONDS", "color_s0@apple0", "color_s0") in new
    assert fact("INSTANCE_OF_AT", "color_s0@apple0", "Green", "t1") in new
    assert fact("INSTANCE_OF_AT", "color_s0@apple0", "Red", "t2") in new
    again, more = expand_qualities(new)
    assert more == {} and again.fact_set() == new.fact_set()


def test_expansion_walks_every_proper_whole():
    text = """
entity cell : MaterialEntity
entity organ : MaterialEntity
entity body : MaterialEntity
entity here : SpatialRegion
entity m : Quality
fact P(cell, organ)
fact P(organ, body)
fact P(cell, here)
fact INH(m, cell)
"""
    new, mapping = expand_qualities(kb_of(text))
    # a spatial region is an independent continuant too
    assert sorted(mapping) == ["m@body", "m@here", "m@organ"]


def test_sponge_is_both_kinds_and_ductility_counts():
    text = """
entity sponge : MaterialEntity
entity shape : Quality
entity metal : MaterialEntity
entity ductility : Disposition
entity press : SpatialChange "a change of shape of a sponge"
entity soften : Process
fact INH(shape, sponge)
fact INH(ductility, metal)
fact PSDC(press, shape)
fact PCSP(sponge, press)
fact PSDC(soften, ductility)
"""
    kb = kb_of(text)
    assert classify_sdcc(kb, "press") and classify_spatial(kb, "press")
    assert derived_categories(kb)["press"].derived == {C.SDC_CHANGE, C.SPATIAL_CHANGE, C.SIMPLE_PROCESS}
    assert classify_sdcc(kb, "soften")


def test_a4_needs_the_disposition_to_inhere_in_a_participant():
    text = """
entity x : MaterialEntity
entity y : MaterialEntity
entity d : Disposition
entity p : Process
entity t : TemporalRegion
fact INH(d, y)
fact PC(x, p, t)
fact REAL(d, p, t)
"""
    assert [d.code for d in check_a4(kb_of(text))] == ["A4_VIOLATION"]
    assert check_a4(kb_of("")) == []


def test_no_part_chains_leave_kb_unchanged(sphere):
    new, mapping = expand_qualities(sphere)
    assert mapping == {} and new is sphere


def test_temporal_sub_processes_are_benign(sphere):
    from procid.cli import main

    extra = """
option parthood-realization
entity rot_first : SpatialChange
entity rot_second : SpatialChange
entity t_first : TemporalRegion
entity t_second : TemporalRegion
interval t_first = [0, 5]
interval t_second = [5, 10]
fact P(rot_first, p_rot)
fact P(rot_second, p_rot)
fact OTR(rot_first, t_first)
fact OTR(rot_second, t_second)
fact PCSP(s1, rot_first)
fact PCSP(s1, rot_second)
fact PC(s1, rot_first, t_first)
fact PC(s1, rot_second, t_second)
"""
    from conftest import CORPUS

    import tempfile, os

    with tempfile.NamedTemporaryFile("w", suffix=".kb", delete=False) as fh:
        fh.write((CORPUS / "sphere.kb").read_text() + extra)
    try:
        assert main(["check", fh.name]) == 0
    finally:
        os.unlink(fh.name)
