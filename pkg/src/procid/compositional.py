"""Compositional identity criteria and the saturation engine.

Every rule reads the knowledge base plus the current equality classes and
disequalities, and proposes derivations. All rule premises are monotone in
the state (per-record participant/witness sets, static classification
guards), so the fixpoint does not depend on the order rules fire in.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations
from typing import Callable, Iterable

from .classification import aggregate_witnesses, classify_simple, classify_spatial
from .core_model import FUNCTIONAL, Diagnostic, KBError, KnowledgeBase
from .mereology import EXTENSIONALITY_RULES
from .state import (
    Derivation,
    DerivationState,
    contradiction_diagnostics,
    derivation_diagnostics,
    eq_ref,
    neq_ref,
)

Rule = Callable[["Context", DerivationState], list[Derivation]]

CRITERIA = ("compositional", "a5", "c1", "c2")


class Context:
    """Static per-KB indexes shared by all rules of one saturation run."""

    def __init__(self, kb: KnowledgeBase) -> None:
        self.kb = kb
        self.processes = kb.processes()
        self.otr = {f.args[0]: f for f in kb.facts_of("OTR")}
        self.psdc = {f.args[0]: f for f in kb.facts_of("PSDC")}
        self.pgdc = {f.args[0]: f for f in kb.facts_of("PGDC")}
        self.ostr = {f.args[0]: f for f in kb.facts_of("OSTR")}
        self.pcsp: dict[str, list] = {}
        for f in kb.facts_of("PCSP"):
            self.pcsp.setdefault(f.args[1], []).append(f)
        self.pc: dict[str, list] = {}
        for f in kb.facts_of("PC"):
            self.pc.setdefault(f.args[1], []).append(f)
        self._spatial: set[str] | None = None
        self._aggregates: dict | None = None
        self._profiles: dict | None = None

    @property
    def spatial(self) -> set[str]:
        if self._spatial is None:
            self._spatial = {p for p in self.processes if classify_spatial(self.kb, p)}
        return self._spatial

    @property
    def aggregates(self) -> dict[str, list]:
        if self._aggregates is None:
            self._aggregates = {}
            for p in self.processes:
                w = aggregate_witnesses(self.kb, p)
                if w:
                    self._aggregates[p] = w
        return self._aggregates

    @property
    def profiles(self) -> dict[str, list]:
        """Per-process REAL facts, closure-derived ones included under the flag."""
        if self._profiles is None:
            from .causal import realization_facts

            self._profiles = {}
            for f in realization_facts(self.kb):
                self._profiles.setdefault(f.args[1], []).append(f)
        return self._profiles


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def image(state: DerivationState, xs: Iterable) -> frozenset:
    return frozenset(tuple(state.find(v) for v in x) if isinstance(x, tuple) else state.find(x) for x in xs)


def _roots(state: DerivationState, x) -> tuple:
    return tuple(state.find(v) for v in x) if isinstance(x, tuple) else (state.find(x),)


def can_coincide(state: DerivationState, xs, ys) -> bool:
    """Whether merging more classes, without joining disequal ones, can make the sets equal.

    Each element must end up equal to some element of the other side. Choosing
    such a partner for every element and closing under union gives the least
    merge that could work, so a backtracking search over partner choices is
    complete. Elements may be ids or equal-length tuples of ids.
    """
    xs = sorted({_roots(state, x) for x in xs})
    ys = sorted({_roots(state, y) for y in ys})
    if not xs or not ys:
        return not xs and not ys
    items = [(x, ys) for x in xs] + [(y, xs) for y in ys]

    def find(parent, a):
        while parent.get(a, a) != a:
            a = parent[a]
        return a

    def joined(parent, pairs):
        parent = dict(parent)
        blocks: dict = {}
        for a, b in pairs:
            ra, rb = find(parent, a), find(parent, b)
            if ra != rb:
                parent[rb] = ra
        for r in {v for pair in pairs for v in pair}:
            blocks.setdefault(find(parent, r), set()).add(r)
        for a in list(parent):
            blocks.setdefault(find(parent, a), set()).add(a)
        for block in blocks.values():
            if any(state.distinct(a, b) for a in block for b in block):
                return None
        return parent

    def solve(i, parent) -> bool:
        if i == len(items):
            return True
        x, others = items[i]
        if any(all(find(parent, a) == find(parent, b) for a, b in zip(x, y)) for y in others):
            return solve(i + 1, parent)
        for y in others:
            nxt = joined(parent, list(zip(x, y)))
            if nxt is not None and solve(i + 1, nxt):
                return True
        return False

    start = joined({r: r for x in xs + ys for r in x}, [])
    return start is not None and solve(0, start)


def provably_differ(state: DerivationState, xs, ys) -> bool:
    """No merge consistent with the known disequalities makes the two sets equal."""
    return not can_coincide(state, xs, ys)


def differ_refs(state: DerivationState, xs, ys) -> list[str]:
    """Disequalities among the sets' elements, the premises of ``provably_differ``."""
    ids = sorted({v for x in list(xs) + list(ys) for v in (x if isinstance(x, tuple) else (x,))})
    return sorted({neq_ref(state.canon(a), state.canon(b)) for a in ids for b in ids if a <= b and state.distinct(a, b)})


def _refs(state: DerivationState, pairs) -> list[str]:
    out = []
    for a, b in pairs:
        if a == b:
            continue
        if state.same(a, b):
            out.append(eq_ref(a, b))
        elif state.distinct(a, b):
            out.append(neq_ref(a, b))
    return out


# ---------------------------------------------------------------------------
# base rules
# ---------------------------------------------------------------------------


def assert_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    out = [Derivation("eq", *f.args, "ASSERT", (f.id,)) for f in ctx.kb.facts_of("EQ")]
    out += [Derivation("neq", *f.args, "ASSERT", (f.id,)) for f in ctx.kb.facts_of("NEQ")]
    return out


def extent_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    out = []
    for t, u in combinations(sorted(ctx.kb.extents), 2):
        kind = "eq" if ctx.kb.extents[t] == ctx.kb.extents[u] else "neq"
        prem = (f"interval({t})", f"interval({u})")
        out.append(Derivation(kind, t, u, "EXTENT", prem))
    return out


def functional_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    """Functional relations: equal subjects force equal values, and back for disequality."""
    out = []
    for rel in FUNCTIONAL:
        for f, g in combinations(ctx.kb.facts_of(rel), 2):
            (a, b), (a2, b2) = f.args, g.args
            if state.same(a, a2) and not state.same(b, b2):
                out.append(Derivation("eq", b, b2, f"FUNC-{rel}", (f.id, g.id, *_refs(state, [(a, a2)]))))
            if state.distinct(b, b2) and not state.distinct(a, a2):
                out.append(Derivation("neq", a, a2, f"FUNC-{rel}", (f.id, g.id, neq_ref(b, b2))))
    return out


def _change_rule(ctx: Context, state: DerivationState, index: dict, axiom: str) -> list[Derivation]:
    out = []
    cands = sorted(p for p in index if p in ctx.otr)
    for p1, p2 in combinations(cands, 2):
        f1, f2 = index[p1], index[p2]
        o1, o2 = ctx.otr[p1], ctx.otr[p2]
        c1, c2 = f1.args[1], f2.args[1]
        t1, t2 = o1.args[1], o2.args[1]
        base = (f1.id, f2.id, o1.id, o2.id)
        if state.same(c1, c2) and state.same(t1, t2) and not state.same(p1, p2):
            out.append(Derivation("eq", p1, p2, axiom, base + tuple(_refs(state, [(c1, c2), (t1, t2)]))))
        if (state.distinct(c1, c2) or state.distinct(t1, t2)) and not state.distinct(p1, p2):
            refs = [r for r in _refs(state, [(c1, c2), (t1, t2)]) if r.startswith("NEQ")]
            out.append(Derivation("neq", p1, p2, axiom, base + tuple(refs[:1])))
    return out


def a1_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    return _change_rule(ctx, state, ctx.psdc, "A1")


def gdc_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    return _change_rule(ctx, state, ctx.pgdc, "GDC")


def a2_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    out = []
    cands = sorted(p for p in ctx.spatial if p in ctx.otr and ctx.pcsp.get(p))
    for p1, p2 in combinations(cands, 2):
        x1 = [f.args[0] for f in ctx.pcsp[p1]]
        x2 = [f.args[0] for f in ctx.pcsp[p2]]
        t1, t2 = ctx.otr[p1].args[1], ctx.otr[p2].args[1]
        base = tuple(f.id for f in ctx.pcsp[p1] + ctx.pcsp[p2]) + (ctx.otr[p1].id, ctx.otr[p2].id)
        if image(state, x1) == image(state, x2) and state.same(t1, t2) and not state.same(p1, p2):
            pairs = [(a, b) for a in x1 for b in x2 if state.same(a, b)] + [(t1, t2)]
            out.append(Derivation("eq", p1, p2, "A2", base + tuple(_refs(state, pairs))))
        if (state.distinct(t1, t2) or provably_differ(state, x1, x2)) and not state.distinct(p1, p2):
            why = [neq_ref(t1, t2)] if state.distinct(t1, t2) else differ_refs(state, x1, x2)
            out.append(Derivation("neq", p1, p2, "A2", base + tuple(why)))
    return out


def a3_rule(ctx: Context, state: DerivationState) -> list[Derivation]:
    out = []
    aggs = ctx.aggregates
    for p1, p2 in combinations(sorted(aggs), 2):
        w1, w2 = aggs[p1], aggs[p2]
        if not state.same(p1, p2):
            for f1 in w1:
                hit = next((f2 for f2 in w2 if image(state, f1.args[1:]) == image(state, f2.args[1:])), None)
                if hit is not None:
                    pairs = [(a, b) for a in f1.args[1:] for b in hit.args[1:] if state.same(a, b)]
                    out.append(Derivation("eq", p1, p2, "A3", (f1.id, hit.id, *_refs(state, pairs))))
                    break
        if not state.distinct(p1, p2) and all(
            provably_differ(state, f1.args[1:], f2.args[1:]) for f1 in w1 for f2 in w2
        ):
            why = sorted({r for f1 in w1 for f2 in w2 for r in differ_refs(state, f1.args[1:], f2.args[1:])})
            out.append(Derivation("neq", p1, p2, "A3", tuple(f.id for f in w1 + w2) + tuple(why)))
    return out


BASE_RULES: dict[str, Rule] = {
    "ASSERT": assert_rule,
    "EXTENT": extent_rule,
    "FUNC": functional_rule,
}
for _name, _fn in EXTENSIONALITY_RULES.items():
    BASE_RULES[_name] = (lambda fn: lambda ctx, state: fn(ctx.kb, state))(_fn)


def rule_table(kb: KnowledgeBase, criterion: str = "compositional") -> dict[str, Rule]:
    """Named rules for one engine run; base congruence plus the criterion's own rules."""
    if criterion not in CRITERIA:
        raise KBError("UNKNOWN_CRITERION", f"criterion must be one of {', '.join(CRITERIA)}")
    rules = dict(BASE_RULES)
    if criterion == "compositional":
        rules.update({"A1": a1_rule, "A2": a2_rule, "A3": a3_rule})
        if kb.has_option("extended-simple"):
            rules["GDC"] = gdc_rule
    else:
        from . import causal

        rules.update({"a5": {"A5": causal.a5_rule}, "c1": {"C1": causal.c1_rule}, "c2": {"C2": causal.c2_rule}}[criterion])
    return rules


def run_rules(ctx: Context, state: DerivationState, rules: dict[str, Rule], order: Iterable[str] | None = None) -> list[Derivation]:
    """Fire rules until none changes the state; returns the applied derivations."""
    names = list(order) if order is not None else list(rules)
    if sorted(names) != sorted(rules):
        raise ValueError(f"rule order must be a permutation of {sorted(rules)}")
    start = len(state.derivations)
    queue = deque(names)
    queued = set(names)
    state.pending = queue
    while queue:
        name = queue.popleft()
        queued.discard(name)
        changed = False
        for d in rules[name](ctx, state):
            changed |= state.apply(d)
        if changed:
            for n in names:
                if n not in queued:
                    queue.append(n)
                    queued.add(n)
    return state.derivations[start:]


def saturate(
    kb: KnowledgeBase,
    criterion: str = "compositional",
    rule_order: Iterable[str] | None = None,
) -> tuple[DerivationState, list[Diagnostic]]:
    """Run the criterion's rules plus congruence and extensionality to fixpoint."""
    ctx = Context(kb)
    state = DerivationState(kb.entities)
    run_rules(ctx, state, rule_table(kb, criterion), rule_order)
    diags = derivation_diagnostics(state.derivations) + contradiction_diagnostics(state)
    return state, diags


def _single(rule: Rule, kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    applied = [d for d in rule(Context(kb), state) if state.apply(d)]
    return derivation_diagnostics(applied)


def apply_a1(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    """One pass of the SDC-change criterion over ``state``."""
    return _single(a1_rule, kb, state)


def apply_a2(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    return _single(a2_rule, kb, state)


def apply_a3(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    return _single(a3_rule, kb, state)


def apply_gdc_axiom(kb: KnowledgeBase, state: DerivationState) -> list[Diagnostic]:
    if not kb.has_option("extended-simple"):
        raise KBError("FLAG_REQUIRED", "the GDC-change criterion needs the extended-simple option")
    return _single(gdc_rule, kb, state)


def compositional_verdict(kb: KnowledgeBase, state: DerivationState, p1: str, p2: str) -> str:
    """SAME/DIFFERENT under the compositional criteria; UNDETERMINED outside the decomposition."""
    from .classification import classify_aggregate

    for p in (p1, p2):
        if not (classify_simple(kb, p) or classify_aggregate(kb, p, state)):
            return "UNDETERMINED"
    return "SAME" if state.same(p1, p2) else "DIFFERENT"


def new_state(kb: KnowledgeBase) -> DerivationState:
    return DerivationState(kb.entities)

