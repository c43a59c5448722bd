"""Process classification, decomposition/realization checks and quality expansion."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core_model import (
    Category,
    Diagnostic,
    Entity,
    Fact,
    KBError,
    KnowledgeBase,
    fact,
    rebuild,
    same_time,
)
from .mereology import graph
from .state import DerivationState

C = Category


@dataclass(frozen=True)
class Finding:
    """Outcome of a classifier; truthy iff it holds."""

    holds: bool
    provenance: tuple[str, ...] = ()
    witnesses: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class ClassificationResult:
    subject: str
    derived: frozenset[Category]
    provenance: tuple[str, ...] = field(default=())


def _require_process(kb: KnowledgeBase, p: str) -> None:
    if not kb.category(p).is_a(C.PROCESS):
        raise KBError("NOT_A_PROCESS", f"{p!r} is {kb.category(p).value}, not a Process")


def classify_sdcc(kb: KnowledgeBase, p: str) -> Finding:
    _require_process(kb, p)
    facts = [f.id for f in kb.facts_of("PSDC") if f.args[0] == p]
    return Finding(bool(facts), tuple(facts))


def _spatial_witness(kb: KnowledgeBase, p: str) -> tuple[str, ...]:
    """A participant with some part located at two regions at two times."""
    participants = {f.args[0] for f in kb.facts_of("PCSP") if f.args[1] == p}
    participants |= {f.args[0] for f in kb.facts_of("PC") if f.args[1] == p}
    if not participants:
        return ()
    g = graph(kb)
    located: dict[str, list[Fact]] = {}
    for f in kb.facts_of("LOCATED_AT"):
        located.setdefault(f.args[0], []).append(f)
    for x in sorted(participants):
        for y in sorted(located):
            if not g.part_of(y, x):
                continue
            locs = located[y]
            for i, f in enumerate(locs):
                for h in locs[i + 1 :]:
                    if f.args[1] != h.args[1] and not same_time(kb, f.args[2], h.args[2]):
                        return (f.id, h.id)
    return ()


def classify_spatial(kb: KnowledgeBase, p: str) -> Finding:
    _require_process(kb, p)
    if kb.category(p).is_a(C.SPATIAL_CHANGE):
        return Finding(True, (f"declared({p}:SpatialChange)",))
    witness = _spatial_witness(kb, p)
    return Finding(bool(witness), witness)


def classify_gdcc(kb: KnowledgeBase, p: str) -> Finding:
    _require_process(kb, p)
    if not kb.has_option("extended-simple"):
        return Finding(False)
    facts = [f.id for f in kb.facts_of("PGDC") if f.args[0] == p]
    return Finding(bool(facts), tuple(facts))


def classify_simple(kb: KnowledgeBase, p: str) -> bool:
    return bool(classify_sdcc(kb, p) or classify_spatial(kb, p) or classify_gdcc(kb, p))


def aggregate_witnesses(kb: KnowledgeBase, p: str, state: DerivationState | None = None) -> list[Fact]:
    """SUM facts that make ``p`` a sum of at least two distinct simple processes.

    Distinctness and the self-sum exclusion are judged modulo ``state`` when given,
    otherwise by identifier.
    """
    same = state.same if state is not None else (lambda a, b: a == b)
    out = []
    for f in kb.facts_of("SUM"):
        if f.args[0] != p:
            continue
        parts = f.args[1:]
        if any(same(x, p) for x in parts):
            continue
        if not all(kb.category(x).is_a(C.PROCESS) and classify_simple(kb, x) for x in parts):
            continue
        if any(not same(parts[0], x) for x in parts[1:]):
            out.append(f)
    return sorted(out)


def classify_aggregate(kb: KnowledgeBase, p: str, state: DerivationState | None = None) -> Finding:
    _require_process(kb, p)
    wit = aggregate_witnesses(kb, p, state)
    if not wit:
        return Finding(False)
    parts = tuple(dict.fromkeys(x for f in wit for x in f.args[1:]))
    return Finding(True, tuple(f.id for f in wit), parts)


def derived_categories(kb: KnowledgeBase, state: DerivationState | None = None) -> dict[str, ClassificationResult]:
    """Classification of every declared process; usable as ``derived`` for is_in_category."""
    out = {}
    for p in kb.processes():
        cats: set[Category] = set()
        prov: list[str] = []
        for cat, fn in ((C.SDC_CHANGE, classify_sdcc), (C.SPATIAL_CHANGE, classify_spatial), (C.GDC_CHANGE, classify_gdcc)):
            r = fn(kb, p)
            if r:
                cats.add(cat)
                prov.extend(r.provenance)
        if cats:
            cats.add(C.SIMPLE_PROCESS)
        agg = classify_aggregate(kb, p, state)
        if agg:
            cats.add(C.PROCESS_AGGREGATE)
            prov.extend(agg.provenance)
        out[p] = ClassificationResult(p, frozenset(cats), tuple(prov))
    return out


def classification_diagnostics(kb: KnowledgeBase, state: DerivationState | None = None) -> list[Diagnostic]:
    out = []
    for p, res in derived_categories(kb, state).items():
        if not res.derived:
            continue
        names = ", ".join(sorted(c.value for c in res.derived))
        out.append(Diagnostic("CLASSIFIED", (p,), f"{p}: {names}", premises=res.provenance))
    return out


def check_pdh(kb: KnowledgeBase, state: DerivationState | None = None) -> list[Diagnostic]:
    out = []
    for p in kb.processes():
        if classify_simple(kb, p) or classify_aggregate(kb, p, state):
            continue
        hint = ""
        if any(f.args[0] == p for f in kb.facts_of("PGDC")):
            hint = " (a GDC change counts as simple only with extended-simple)"
        out.append(
            Diagnostic(
                "PDH_VIOLATION",
                (p,),
                f"{p} is neither a simple process nor a process aggregate{hint}",
                axiom="PDH",
                span=kb.spans.get(p),
            )
        )
    return out


def check_a4(kb: KnowledgeBase, state: DerivationState | None = None) -> list[Diagnostic]:
    """Every process must realize a disposition of one of its participants at a shared time."""
    from .causal import realization_facts

    real = realization_facts(kb)
    inh = {f.args[0]: f for f in kb.facts_of("INH")}
    same = state.same if state is not None else (lambda a, b: a == b)

    def same_t(a: str, b: str) -> bool:
        return same_time(kb, a, b) or same(a, b)

    out = []
    for p in kb.processes():
        ok = False
        pcs = [f for f in kb.facts_of("PC") if f.args[1] == p]
        for r in (r for r in real if r.args[1] == p):
            d, t = r.args[0], r.args[2]
            bearer = inh.get(d)
            if bearer is None:
                continue
            if any(same(pc.args[0], bearer.args[1]) and same_t(pc.args[2], t) for pc in pcs):
                ok = True
                break
        if not ok:
            out.append(
                Diagnostic(
                    "A4_VIOLATION",
                    (p,),
                    f"{p} realizes no disposition of a participant at a participation time",
                    axiom="A4",
                    span=kb.spans.get(p),
                )
            )
    return out


def check_participation(kb: KnowledgeBase) -> list[Diagnostic]:
    """Under strict-participation, each simple process has exactly one PCSP participant."""
    if not kb.has_option("strict-participation"):
        return []
    out = []
    for p in kb.processes():
        if not classify_simple(kb, p):
            continue
        xs = sorted({f.args[0] for f in kb.facts_of("PCSP") if f.args[1] == p})
        if len(xs) != 1:
            out.append(
                Diagnostic(
                    "PARTICIPATION_VIOLATION",
                    (p,),
                    f"simple process {p} has {len(xs)} PCSP participant(s), expected exactly one",
                    axiom="STRICT-PARTICIPATION",
                )
            )
    return out


def expansion_id(quality: str, whole: str) -> str:
    return f"{quality}@{whole}"


def expand_qualities(kb: KnowledgeBase) -> tuple[KnowledgeBase, dict[str, str]]:
    """Give every proper whole of a quality's bearer a corresponding quality.

    Returns the new KB and a map from each added quality to the quality it
    corresponds to. Qualities that are themselves expansions are not expanded
    again, which keeps the transform idempotent.
    """
    g = graph(kb)
    corresponds = {(f.args[0], f.args[1]) for f in kb.facts_of("CORRESPONDS")}
    derived_qualities = {a for a, _ in corresponds}
    bearer_of = {f.args[0]: f.args[1] for f in kb.facts_of("INH")}
    inst = kb.facts_of("INSTANCE_OF_AT")

    new_entities: list[Entity] = []
    new_facts: list[Fact] = []
    mapping: dict[str, str] = {}
    taken = set(kb.entities)
    for q in kb.ids_in(C.QUALITY):
        if q in derived_qualities or q not in bearer_of:
            continue
        y = bearer_of[q]
        for x in sorted(g.ancestors(y) - {y}):
            if not kb.category(x).is_a(C.INDEPENDENT_CONTINUANT):
                continue
            if any(b == q and bearer_of.get(a) == x for a, b in corresponds):
                continue
            qx = expansion_id(q, x)
            while qx in taken:
                qx += "'"
            taken.add(qx)
            mapping[qx] = q
            new_entities.append(Entity(qx, C.QUALITY, f"expansion of {q} in {x}"))
            new_facts.append(fact("INH", qx, x))
            new_facts.append(fact("CORRESPONDS", qx, q))
            new_facts.extend(fact("INSTANCE_OF_AT", qx, f.args[1], f.args[2]) for f in inst if f.args[0] == q)
    if not new_entities:
        return kb, {}
    return rebuild(kb, add=new_facts, entities=new_entities), mapping
