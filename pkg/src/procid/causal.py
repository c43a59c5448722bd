"""Dispositional identity, the participant/region baselines, and history analysis."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .core_model import Category, Diagnostic, Fact, KBError, KnowledgeBase, fact
from .mereology import graph
from .state import Derivation, DerivationState, derivation_diagnostics, eq_ref

C = Category


@dataclass(frozen=True)
class RealizationProfile:
    subject: str
    entries: frozenset[tuple[str, str]]

    def __bool__(self) -> bool:
        return bool(self.entries)


def parthood_realization_closure(kb: KnowledgeBase, state: DerivationState | None = None) -> list[Fact]:
    """REAL facts implied by parts of realizations also being realizations.

    Each timed part inherits the realization at its own temporal region; parts
    without an OTR fact are skipped.
    """
    if not kb.has_option("parthood-realization"):
        raise KBError("FLAG_REQUIRED", "the realization closure needs the parthood-realization option")
    g = graph(kb, state)
    otr = {f.args[0]: f.args[1] for f in kb.facts_of("OTR")}
    have = set(kb.facts_of("REAL"))
    out: dict[Fact, None] = {}
    for r in kb.facts_of("REAL"):
        d, p = r.args[0], r.args[1]
        for q in kb.processes():
            if q == p or q not in otr or g.node(q) == g.node(p) or not g.part_of(q, p):
                continue
            new = fact("REAL", d, q, otr[q])
            if new not in have:
                out[new] = None
    return sorted(out)


def realization_facts(kb: KnowledgeBase) -> tuple[Fact, ...]:
    """Asserted REAL facts, plus closure-derived ones when the flag is on."""
    hit = kb._cache.get("realizations")
    if hit is None:
        hit = kb.facts_of("REAL")
        if kb.has_option("parthood-realization"):
            hit = hit + tuple(parthood_realization_closure(kb))
        kb._cache["realizations"] = hit
    return hit


def realization_profile(kb: KnowledgeBase, state: DerivationState | None, p: str) -> RealizationProfile:
    if not kb.category(p).is_a(C.PROCESS):
        raise KBError("NOT_A_PROCESS", f"{p!r} is not a Process")
    norm = state.canon if state is not None else (lambda x: x)
    entries = frozenset((norm(f.args[0]), norm(f.args[2])) for f in realization_facts(kb) if f.args[1] == p)
    return RealizationProfile(p, entries)


# ---------------------------------------------------------------------------
# rules (used by compositional.saturate for the a5/c1/c2 criteria)
# ---------------------------------------------------------------------------


def _pairs_rule(ctx, state: DerivationState, index: dict, axiom: str) -> list[Derivation]:
    from .compositional import differ_refs, image, provably_differ

    out = []
    cands = sorted(p for p, fs in index.items() if fs)
    for p1, p2 in combinations(cands, 2):
        e1, e2 = entries(index[p1]), entries(index[p2])
        prem = tuple(f.id for f in index[p1] + index[p2])
        if not state.same(p1, p2) and image(state, e1) == image(state, e2):
            refs = sorted({eq_ref(a, b) for x in e1 for y in e2 for a, b in zip(x, y) if a != b and state.same(a, b)})
            out.append(Derivation("eq", p1, p2, axiom, prem + tuple(refs)))
        if not state.distinct(p1, p2) and provably_differ(state, e1, e2):
            out.append(Derivation("neq", p1, p2, axiom, prem + tuple(differ_refs(state, e1, e2))))
    return out


def entries(facts) -> list[tuple[str, str]]:
    """(realizable-or-participant, time) pairs of REAL or PC facts."""
    return [(f.args[0], f.args[2]) for f in facts]


def a5_rule(ctx, state: DerivationState) -> list[Derivation]:
    return _pairs_rule(ctx, state, ctx.profiles, "A5")


def c1_rule(ctx, state: DerivationState) -> list[Derivation]:
    return _pairs_rule(ctx, state, ctx.pc, "C1")


def c2_rule(ctx, state: DerivationState) -> list[Derivation]:
    out = []
    for p1, p2 in combinations(sorted(ctx.ostr), 2):
        f1, f2 = ctx.ostr[p1], ctx.ostr[p2]
        if state.same(f1.args[1], f2.args[1]) and not state.same(p1, p2):
            refs = (eq_ref(f1.args[1], f2.args[1]),) if f1.args[1] != f2.args[1] else ()
            out.append(Derivation("eq", p1, p2, "C2", (f1.id, f2.id, *refs)))
    return out


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


def _set_verdict(state: DerivationState, p1: str, p2: str, e1, e2) -> str:
    from .compositional import image

    if not e1 or not e2:
        return "UNDETERMINED"
    if state.same(p1, p2) or image(state, e1) == image(state, e2):
        return "SAME"
    return "DIFFERENT"


def c1_verdict(kb: KnowledgeBase, state: DerivationState, p1: str, p2: str) -> str:
    pc = {p: [(f.args[0], f.args[2]) for f in kb.facts_of("PC") if f.args[1] == p] for p in (p1, p2)}
    return _set_verdict(state, p1, p2, pc[p1], pc[p2])


def c2_verdict(kb: KnowledgeBase, state: DerivationState, p1: str, p2: str) -> str:
    s1, s2 = kb.values("OSTR", p1), kb.values("OSTR", p2)
    return _set_verdict(state, p1, p2, s1, s2)


def a5_verdict(kb: KnowledgeBase, state: DerivationState, p1: str, p2: str) -> str:
    real = realization_facts(kb)
    e = {p: [(f.args[0], f.args[2]) for f in real if f.args[1] == p] for p in (p1, p2)}
    return _set_verdict(state, p1, p2, e[p1], e[p2])


def _verdicts(kb: KnowledgeBase, state: DerivationState, fn) -> dict[tuple[str, str], str]:
    return {(a, b): fn(kb, state, a, b) for a, b in combinations(kb.processes(), 2)}


def apply_c1(kb: KnowledgeBase, state: DerivationState) -> dict[tuple[str, str], str]:
    """Participant-identity verdict per process pair; the state is not modified."""
    return _verdicts(kb, state, c1_verdict)


def apply_c2(kb: KnowledgeBase, state: DerivationState) -> dict[tuple[str, str], str]:
    return _verdicts(kb, state, c2_verdict)


def apply_a5(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    """One pass of the dispositional criterion, applied to ``state``."""
    from .compositional import Context

    applied = [d for d in a5_rule(Context(kb), state) if state.apply(d)]
    return derivation_diagnostics(applied)


# ---------------------------------------------------------------------------
# comparison table
# ---------------------------------------------------------------------------

COLUMNS = ("C1", "C2", "A5", "compositional")


@dataclass(frozen=True)
class CriterionRow:
    pair: tuple[str, str]
    verdicts: dict

    @property
    def disagreement(self) -> bool:
        decided = {v for v in self.verdicts.values() if v != "UNDETERMINED"}
        return len(decided) > 1

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), **self.verdicts, "disagreement": self.disagreement}


def criterion_states(kb: KnowledgeBase) -> dict[str, DerivationState]:
    from .compositional import saturate

    return {
        "C1": saturate(kb, "c1")[0],
        "C2": saturate(kb, "c2")[0],
        "A5": saturate(kb, "a5")[0],
        "compositional": saturate(kb, "compositional")[0],
    }


def compare_criteria(kb: KnowledgeBase, states: dict[str, DerivationState] | None = None) -> list[CriterionRow]:
    from .compositional import compositional_verdict

    states = states or criterion_states(kb)
    fns = {"C1": c1_verdict, "C2": c2_verdict, "A5": a5_verdict, "compositional": compositional_verdict}
    rows = []
    for p1, p2 in combinations(kb.processes(), 2):
        rows.append(CriterionRow((p1, p2), {c: fns[c](kb, states[c], p1, p2) for c in COLUMNS}))
    return rows


def consistency_scan(kb: KnowledgeBase, states: dict[str, DerivationState] | None = None) -> list[tuple[str, str]]:
    """Pairs merged compositionally while the dispositional run separates them."""
    states = states or criterion_states(kb)
    comp, a5 = states["compositional"], states["A5"]
    real = realization_facts(kb)
    out = []
    for p1, p2 in combinations(kb.processes(), 2):
        complete = all(any(f.args[1] == p for f in real) for p in (p1, p2))
        if complete and comp.same(p1, p2) and a5.distinct(p1, p2):
            out.append((p1, p2))
    return out


# ---------------------------------------------------------------------------
# histories
# ---------------------------------------------------------------------------


def history_check(
    kb: KnowledgeBase, state: DerivationState | None, history: str, bearer: str
) -> list[Diagnostic]:
    """Check that a history holds exactly the processes confined to its bearer's region.

    The bearer's spatiotemporal region is the one the history occupies. Besides
    violations, emits HISTORY_NOTE for realizations of the bearer's dispositions
    that spill outside the region while a confined part of them is in the history.
    """
    if not kb.category(history).is_a(C.HISTORY):
        raise KBError("NOT_A_HISTORY", f"{history!r} is not a History")
    if not kb.category(bearer).is_a(C.MATERIAL_ENTITY):
        raise KBError("NOT_A_MATERIAL_ENTITY", f"{bearer!r} is not a MaterialEntity")
    region = kb.values("OSTR", history)
    if not region:
        raise KBError("MISSING_OSTR", f"history {history!r} has no OSTR fact")
    region = region[0]
    g = graph(kb, state)
    ostr = {f.args[0]: f for f in kb.facts_of("OSTR")}
    out: list[Diagnostic] = []
    confined_parts: dict[str, bool] = {}
    for p in kb.processes():
        if g.node(p) == g.node(history):
            continue
        in_history = g.part_of(p, history)
        occ = ostr.get(p)
        if occ is None:
            if in_history:
                out.append(Diagnostic("MISSING_OSTR", (p,), f"{p} is part of {history} but occupies no region"))
            continue
        confined = g.part_of(occ.args[1], region)
        confined_parts[p] = confined and in_history
        if confined and not in_history:
            out.append(
                Diagnostic(
                    "HISTORY_VIOLATION",
                    (history, p),
                    f"{p} occurs within the region of {bearer} but is not part of {history}",
                    axiom="HISTORY",
                    premises=(occ.id,),
                )
            )
        elif in_history and not confined:
            out.append(
                Diagnostic(
                    "HISTORY_VIOLATION",
                    (history, p),
                    f"{p} is part of {history} but occupies {occ.args[1]}, outside the region of {bearer}",
                    axiom="HISTORY",
                    premises=(occ.id,),
                )
            )
    out.extend(_spillover_notes(kb, g, history, bearer, region, ostr, confined_parts))
    return out


def _spillover_notes(kb, g, history, bearer, region, ostr, confined_parts) -> list[Diagnostic]:
    bearer_dispositions = {
        f.args[0] for f in kb.facts_of("INH") if g.part_of(f.args[1], bearer)
    }
    real = realization_facts(kb)
    notes = []
    for r in kb.facts_of("REAL"):
        d, p = r.args[0], r.args[1]
        if d not in bearer_dispositions or p not in ostr or g.part_of(p, history):
            continue
        if g.part_of(ostr[p].args[1], region):
            continue
        for q in sorted(confined_parts):
            if not confined_parts[q] or q == p or not g.part_of(q, p):
                continue
            also = any(f.args[0] == d and f.args[1] == q for f in real)
            tail = f"; {d} is also realized in {q}" if also else ""
            notes.append(
                Diagnostic(
                    "HISTORY_NOTE",
                    (history, p, q),
                    f"{p} realizes {d} of {bearer} but exceeds its region and is excluded; "
                    f"its confined part {q} is included{tail}",
                    axiom="HISTORY",
                    premises=(r.id, ostr[p].id, ostr[q].id),
                )
            )
    return notes
