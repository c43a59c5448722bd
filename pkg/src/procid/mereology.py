"""Classical extensional mereology over declared entities (closed world).

Parthood edges come from ``P(x, y)`` facts and from ``SUM(y, x1, ..., xn)``
facts, each listed part being part of the whole.
"""

from __future__ import annotations

from .core_model import Diagnostic, KnowledgeBase
from .state import Derivation, DerivationState, derivation_diagnostics, eq_ref


def parthood_edges(kb: KnowledgeBase) -> list[tuple[str, str, str]]:
    """(part, whole, fact id) for every asserted or sum-implied parthood."""
    edges = [(f.args[0], f.args[1], f.id) for f in kb.facts_of("P")]
    for f in kb.facts_of("SUM"):
        whole = f.args[0]
        edges.extend((x, whole, f.id) for x in f.args[1:])
    return edges


class ParthoodGraph:
    """Reflexive-transitive parthood closure, optionally over equality classes."""

    def __init__(self, kb: KnowledgeBase, state: DerivationState | None = None) -> None:
        self.kb = kb
        self.state = state
        self.up: dict[str, set[str]] = {self.node(x): set() for x in kb.entities}
        for part, whole, _ in parthood_edges(kb):
            a, b = self.node(part), self.node(whole)
            if a != b:
                self.up[a].add(b)
        self._anc: dict[str, frozenset[str]] = {}

    def node(self, x: str) -> str:
        return self.state.find(x) if self.state is not None else x

    def ancestors(self, x: str) -> frozenset[str]:
        """Nodes reachable upward from x, x included."""
        n = self.node(x)
        hit = self._anc.get(n)
        if hit is None:
            seen = {n}
            stack = [n]
            while stack:
                for m in self.up[stack.pop()]:
                    if m not in seen:
                        seen.add(m)
                        stack.append(m)
            hit = self._anc[n] = frozenset(seen)
        return hit

    def part_of(self, x: str, y: str) -> bool:
        return self.node(y) in self.ancestors(x)

    def parts(self, y: str) -> list[str]:
        """Declared entities that are part of y (y's class included)."""
        return [z for z in self.kb.entities if self.part_of(z, y)]


def graph(kb: KnowledgeBase, state: DerivationState | None = None) -> ParthoodGraph:
    if state is not None:
        return ParthoodGraph(kb, state)
    g = kb._cache.get("parthood")
    if g is None:
        g = kb._cache["parthood"] = ParthoodGraph(kb)
    return g


def _known(kb: KnowledgeBase, *ids: str) -> None:
    for x in ids:
        kb.entity(x)


def part_of(kb: KnowledgeBase, x: str, y: str, state: DerivationState | None = None) -> bool:
    _known(kb, x, y)
    return graph(kb, state).part_of(x, y)


def overlap(kb: KnowledgeBase, x: str, y: str, state: DerivationState | None = None) -> bool:
    _known(kb, x, y)
    g = graph(kb, state)
    return any(g.part_of(z, x) and g.part_of(z, y) for z in kb.entities)


def sum_holds(kb: KnowledgeBase, whole: str, parts, state: DerivationState | None = None) -> bool:
    """Closed-world fusion: parts lie under whole and every part of whole meets one of them."""
    parts = list(parts)
    if not parts:
        raise ValueError("sum_holds needs at least one part")
    _known(kb, whole, *parts)
    g = graph(kb, state)
    if not all(g.part_of(p, whole) for p in parts):
        return False
    for z in g.parts(whole):
        if not any(any(g.part_of(w, z) and g.part_of(w, p) for w in kb.entities) for p in parts):
            return False
    return True


def proper_parts(kb: KnowledgeBase, x: str, state: DerivationState | None = None) -> set[str]:
    _known(kb, x)
    g = graph(kb, state)
    return {y for y in g.parts(x) if g.node(y) != g.node(x)}


def static_proper_parts(kb: KnowledgeBase) -> dict[str, frozenset[str]]:
    """Entity-level proper parts from asserted edges only (no equality)."""
    hit = kb._cache.get("static_pp")
    if hit is None:
        g = graph(kb)
        hit = {x: frozenset() for x in kb.entities}
        for y in kb.entities:
            for a in g.ancestors(y):
                if a != y:
                    hit[a] = hit[a] | {y}
        kb._cache["static_pp"] = hit
    return hit


# ---------------------------------------------------------------------------
# Extensionality rules (proposals; the caller applies them)
# ---------------------------------------------------------------------------


def antisymmetry_rule(kb: KnowledgeBase, state: DerivationState) -> list[Derivation]:
    g = ParthoodGraph(kb, state)
    out = []
    edges = parthood_edges(kb)
    done: set[str] = set()
    for n in sorted(g.up):
        if n in done:
            continue
        scc = sorted(m for m in g.ancestors(n) if n in g.ancestors(m))
        done.update(scc)
        if len(scc) < 2:
            continue
        inside = set(scc)
        premises = tuple(sorted({fid for a, b, fid in edges if g.node(a) in inside and g.node(b) in inside}))
        out.extend(Derivation("eq", scc[0], m, "EXT-ANTISYMMETRY", premises) for m in scc[1:])
    return out


def _match_refs(state: DerivationState, xs, ys) -> list[str]:
    refs = []
    for x in xs:
        for y in ys:
            if x != y and state.same(x, y):
                refs.append(eq_ref(x, y))
                break
    return refs


def sum_functional_rule(kb: KnowledgeBase, state: DerivationState) -> list[Derivation]:
    groups: dict[frozenset, list] = {}
    for f in sorted(kb.facts_of("SUM")):
        key = frozenset(state.find(x) for x in f.args[1:])
        groups.setdefault(key, []).append(f)
    out = []
    for facts in groups.values():
        first = facts[0]
        for f in facts[1:]:
            if state.same(first.args[0], f.args[0]):
                continue
            premises = (first.id, f.id, *_match_refs(state, first.args[1:], f.args[1:]))
            out.append(Derivation("eq", first.args[0], f.args[0], "EXT-SUM", premises))
    return out


def proper_part_rule(kb: KnowledgeBase, state: DerivationState) -> list[Derivation]:
    pp = static_proper_parts(kb)
    direct: dict[str, list[str]] = {}
    for part, whole, fid in parthood_edges(kb):
        direct.setdefault(whole, []).append(fid)
    groups: dict[frozenset, list[str]] = {}
    for x in sorted(kb.entities):
        if pp[x]:
            groups.setdefault(frozenset(state.find(y) for y in pp[x]), []).append(x)
    out = []
    for xs in groups.values():
        for x in xs[1:]:
            if state.same(xs[0], x):
                continue
            premises = tuple(sorted(set(direct.get(xs[0], []) + direct.get(x, []))))
            premises += tuple(_match_refs(state, sorted(pp[xs[0]]), sorted(pp[x])))
            out.append(Derivation("eq", xs[0], x, "EXT-PROPER-PARTS", premises))
    return out


EXTENSIONALITY_RULES = {
    "EXT-ANTISYMMETRY": antisymmetry_rule,
    "EXT-SUM": sum_functional_rule,
    "EXT-PROPER-PARTS": proper_part_rule,
}


def derive_extensional_identities(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    """Run the three extensionality rules to their joint fixpoint on ``state``."""
    applied: list[Derivation] = []
    changed = True
    while changed:
        changed = False
        for rule in EXTENSIONALITY_RULES.values():
            for d in rule(kb, state):
                if state.apply(d):
                    applied.append(d)
                    changed = True
    return derivation_diagnostics(applied)
