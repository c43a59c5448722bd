"""Equality classes and disequalities with provenance."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .core_model import Diagnostic


@dataclass(frozen=True)
class Derivation:
    kind: str  # "eq" or "neq"
    a: str
    b: str
    axiom: str
    premises: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.kind.upper()}({self.a},{self.b})"


def eq_ref(a: str, b: str) -> str:
    a, b = sorted((a, b))
    return f"EQ({a},{b})"


def neq_ref(a: str, b: str) -> str:
    a, b = sorted((a, b))
    return f"NEQ({a},{b})"


class DerivationState:
    """Union-find over entity ids plus class-level disequalities.

    Only changes at class level are recorded, so ``derivations`` lists exactly
    the steps that moved the state.
    """

    def __init__(self, ids: Iterable[str] = ()) -> None:
        self._parent: dict[str, str] = {}
        self._rank: dict[str, int] = {}
        self._members: dict[str, set[str]] = {}
        self._neq: dict[str, set[str]] = {}
        self.derivations: list[Derivation] = []
        self.pending: deque = deque()
        for x in ids:
            self._add(x)

    def _add(self, x: str) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._rank[x] = 0
            self._members[x] = {x}
            self._neq[x] = set()

    def find(self, x: str) -> str:
        self._add(x)
        p = self._parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def same(self, a: str, b: str) -> bool:
        return self.find(a) == self.find(b)

    def distinct(self, a: str, b: str) -> bool:
        return self.find(b) in self._neq[self.find(a)]

    def members(self, x: str) -> frozenset[str]:
        return frozenset(self._members[self.find(x)])

    def canon(self, x: str) -> str:
        """Smallest id in the class; stable regardless of merge order."""
        return min(self._members[self.find(x)])

    def merge(self, a: str, b: str, axiom: str, premises: Iterable[str] = ()) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._members[ra] |= self._members.pop(rb)
        for other in self._neq.pop(rb):
            if other == rb:
                self._neq[ra].add(ra)
                continue
            self._neq[other].discard(rb)
            self._neq[other].add(ra)
            self._neq[ra].add(other)
        self.derivations.append(Derivation("eq", a, b, axiom, tuple(premises)))
        return True

    def add_neq(self, a: str, b: str, axiom: str, premises: Iterable[str] = ()) -> bool:
        ra, rb = self.find(a), self.find(b)
        if rb in self._neq[ra]:
            return False
        self._neq[ra].add(rb)
        self._neq[rb].add(ra)
        self.derivations.append(Derivation("neq", a, b, axiom, tuple(premises)))
        return True

    def apply(self, d: Derivation) -> bool:
        if d.kind == "eq":
            return self.merge(d.a, d.b, d.axiom, d.premises)
        return self.add_neq(d.a, d.b, d.axiom, d.premises)

    # -- canonical views ---------------------------------------------------

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(m) for m in self._members.values())

    def eq_classes(self) -> list[list[str]]:
        """Non-singleton classes, each sorted, in sorted order."""
        return sorted(sorted(m) for m in self._members.values() if len(m) > 1)

    def neq_pairs(self) -> frozenset[tuple[str, str]]:
        out = set()
        for r, others in self._neq.items():
            for o in others:
                a, b = sorted((min(self._members[r]), min(self._members[o])))
                out.add((a, b))
        return frozenset(out)

    def contradictions(self) -> list[str]:
        """Canonical ids of classes that are disequal to themselves."""
        return sorted(min(self._members[r]) for r, o in self._neq.items() if r in o)

    def holds(self, ref: str) -> bool:
        """Whether an ``EQ(a,b)``/``NEQ(a,b)`` reference is true in this state."""
        kind, rest = ref.split("(", 1)
        a, b = rest[:-1].split(",")
        return self.same(a, b) if kind == "EQ" else self.distinct(a, b)

    def copy(self) -> DerivationState:
        new = DerivationState()
        new._parent = dict(self._parent)
        new._rank = dict(self._rank)
        new._members = {k: set(v) for k, v in self._members.items()}
        new._neq = {k: set(v) for k, v in self._neq.items()}
        new.derivations = list(self.derivations)
        return new


def derivation_diagnostics(derivs: Iterable[Derivation], skip_axioms=("ASSERT",)) -> list[Diagnostic]:
    out = []
    for d in derivs:
        if d.axiom in skip_axioms:
            continue
        code = "DERIVED_EQ" if d.kind == "eq" else "DERIVED_NEQ"
        rel = "=" if d.kind == "eq" else "!="
        out.append(
            Diagnostic(
                code,
                tuple(sorted((d.a, d.b))),
                f"{d.a} {rel} {d.b} by {d.axiom}",
                axiom=d.axiom,
                premises=d.premises,
            )
        )
    return out


def contradiction_diagnostics(state: DerivationState) -> list[Diagnostic]:
    out = []
    for c in state.contradictions():
        members = sorted(state.members(c))
        clash = [
            d for d in state.derivations if d.kind == "neq" and state.same(d.a, c) and state.same(d.b, c)
        ]
        premises = tuple(str(d) for d in clash)
        out.append(
            Diagnostic(
                "CONTRADICTION",
                tuple(members),
                f"class {{{', '.join(members)}}} contains a disequal pair",
                axiom="CLOSURE",
                premises=premises,
            )
        )
    return out
