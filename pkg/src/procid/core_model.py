"""Category taxonomy, entities, facts and the validating knowledge-base builder."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping


class KBError(Exception):
    """Raised for unrecoverable lookups and declarations (bad id, bad category)."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class FactRejected(KBError):
    """A fact failed domain/range or functionality validation."""

    def __init__(self, diagnostic: "Diagnostic", arg_index: int | None = None) -> None:
        super().__init__(diagnostic.code, diagnostic.message)
        self.diagnostic = diagnostic
        self.arg_index = arg_index


# ---------------------------------------------------------------------------
# Taxonomy
# ---------------------------------------------------------------------------


class Category(str, Enum):
    ENTITY = "Entity"
    CONTINUANT = "Continuant"
    INDEPENDENT_CONTINUANT = "IndependentContinuant"
    MATERIAL_ENTITY = "MaterialEntity"
    SPATIAL_REGION = "SpatialRegion"
    SDC = "SpecificallyDependentContinuant"
    QUALITY = "Quality"
    REALIZABLE_ENTITY = "RealizableEntity"
    DISPOSITION = "Disposition"
    GDC = "GenericallyDependentContinuant"
    OCCURRENT = "Occurrent"
    PROCESS = "Process"
    SIMPLE_PROCESS = "SimpleProcess"
    SDC_CHANGE = "SDCChange"
    SPATIAL_CHANGE = "SpatialChange"
    GDC_CHANGE = "GDCChange"
    PROCESS_AGGREGATE = "ProcessAggregate"
    HISTORY = "History"
    SPATIOTEMPORAL_REGION = "SpatiotemporalRegion"
    TEMPORAL_REGION = "TemporalRegion"

    @property
    def parent(self) -> Category | None:
        return _PARENT[self]

    def ancestors(self) -> list[Category]:
        """Self first, root last."""
        out = [self]
        while out[-1].parent is not None:
            out.append(out[-1].parent)
        return out

    def is_a(self, other: Category) -> bool:
        return other in self.ancestors()


C = Category
_PARENT: dict[Category, Category | None] = {
    C.ENTITY: None,
    C.CONTINUANT: C.ENTITY,
    C.OCCURRENT: C.ENTITY,
    C.INDEPENDENT_CONTINUANT: C.CONTINUANT,
    C.MATERIAL_ENTITY: C.INDEPENDENT_CONTINUANT,
    C.SPATIAL_REGION: C.INDEPENDENT_CONTINUANT,
    C.SDC: C.CONTINUANT,
    C.QUALITY: C.SDC,
    C.REALIZABLE_ENTITY: C.SDC,
    C.DISPOSITION: C.REALIZABLE_ENTITY,
    C.GDC: C.CONTINUANT,
    C.PROCESS: C.OCCURRENT,
    C.SPATIOTEMPORAL_REGION: C.OCCURRENT,
    C.TEMPORAL_REGION: C.OCCURRENT,
    C.SIMPLE_PROCESS: C.PROCESS,
    C.PROCESS_AGGREGATE: C.PROCESS,
    C.HISTORY: C.PROCESS,
    C.SDC_CHANGE: C.SIMPLE_PROCESS,
    C.SPATIAL_CHANGE: C.SIMPLE_PROCESS,
    C.GDC_CHANGE: C.SIMPLE_PROCESS,
}

# Kinds of simple process a classifier may derive; they are mutually non-disjoint.
SIMPLE_KINDS = frozenset({C.SIMPLE_PROCESS, C.SDC_CHANGE, C.SPATIAL_CHANGE, C.GDC_CHANGE})

OPTION_FLAGS = frozenset(
    {"extended-simple", "parthood-realization", "strict-participation", "exclusive-determinates"}
)


def category_names(options: Iterable[str] = ()) -> list[str]:
    """Names usable in declarations under the given option flags."""
    names = [c.value for c in Category]
    if "extended-simple" not in options:
        names.remove(C.GDC_CHANGE.value)
    return names


def lookup_category(name: str | Category, options: Iterable[str] = ()) -> Category:
    if isinstance(name, Category):
        cat = name
    else:
        try:
            cat = Category(name)
        except ValueError:
            raise KBError("UNKNOWN_CATEGORY", f"{name!r} is not a taxonomy category") from None
    if cat is C.GDC_CHANGE and "extended-simple" not in options:
        raise KBError("UNKNOWN_CATEGORY", "GDCChange requires the extended-simple option")
    return cat


def branch(cat: Category) -> Category | None:
    """Top-level branch (Continuant or Occurrent); None for the bare root."""
    anc = cat.ancestors()
    return anc[-2] if len(anc) >= 2 else None


def compatible(declared: Category, required: Category) -> bool:
    """Whether an entity declared ``declared`` may fill a slot typed ``required``.

    Simple-process kinds are derived from facts, so a process declared at a
    coarser level (or as a sibling simple kind) is accepted in those slots.
    """
    if declared.is_a(required):
        return True
    if required in SIMPLE_KINDS and declared.is_a(C.PROCESS):
        return not declared.is_a(C.PROCESS_AGGREGATE)
    return False


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

TABLE1 = ("INH", "OSTR", "OTR", "P", "PC", "PCSP", "PSDC", "PGDC", "REAL", "SUM")
EXTRA_RELATIONS = ("INSTANCE_OF_AT", "LOCATED_AT", "CORRESPONDS", "COMES_TO_EXIST", "CEASES_TO_EXIST")
RELATIONS = TABLE1 + EXTRA_RELATIONS + ("EQ", "NEQ")

# relation -> per-argument required category; None means unconstrained, "class" a class name
SIGNATURES: dict[str, tuple] = {
    "INH": (C.SDC, C.INDEPENDENT_CONTINUANT),
    "OSTR": (C.PROCESS, C.SPATIOTEMPORAL_REGION),
    "OTR": (C.PROCESS, C.TEMPORAL_REGION),
    "P": (None, None),
    "PC": (C.INDEPENDENT_CONTINUANT, C.PROCESS, C.TEMPORAL_REGION),
    "PCSP": (C.INDEPENDENT_CONTINUANT, C.SIMPLE_PROCESS),
    "PSDC": (C.SDC_CHANGE, C.SDC),
    "PGDC": (C.GDC_CHANGE, C.GDC),
    "REAL": (C.REALIZABLE_ENTITY, C.PROCESS, C.TEMPORAL_REGION),
    "INSTANCE_OF_AT": (None, "class", C.TEMPORAL_REGION),
    "LOCATED_AT": (C.INDEPENDENT_CONTINUANT, C.SPATIAL_REGION, C.TEMPORAL_REGION),
    "CORRESPONDS": (C.QUALITY, C.QUALITY),
    "COMES_TO_EXIST": (C.SDC, C.TEMPORAL_REGION),
    "CEASES_TO_EXIST": (C.SDC, C.TEMPORAL_REGION),
    "EQ": (None, None),
    "NEQ": (None, None),
}

# Functional in the first argument.
FUNCTIONAL = ("INH", "OSTR", "OTR", "PSDC", "PGDC")


def arity_ok(relation: str, n: int) -> bool:
    if relation == "SUM":
        return n >= 3
    return n == len(SIGNATURES[relation])


@dataclass(frozen=True, order=True)
class Fact:
    relation: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.relation not in RELATIONS:
            raise KBError("UNKNOWN_RELATION", f"unknown relation {self.relation!r}")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not arity_ok(self.relation, len(self.args)):
            raise KBError("ARITY", f"{self.relation} given {len(self.args)} argument(s)")
        if self.relation in ("EQ", "NEQ"):
            object.__setattr__(self, "args", tuple(sorted(self.args)))

    @property
    def id(self) -> str:
        return str(self)

    def __str__(self) -> str:
        return f"{self.relation}({','.join(self.args)})"


def fact(relation: str, *args: str) -> Fact:
    return Fact(relation, tuple(args))


@dataclass(frozen=True)
class Entity:
    id: str
    category: Category
    label: str | None = None


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line: int
    col_start: int
    col_end: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col_start}-{self.col_end}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subjects: tuple[str, ...]
    message: str
    axiom: str | None = None
    premises: tuple[str, ...] = ()
    span: SourceSpan | None = None

    def sort_key(self):
        return (self.code, self.subjects, self.message)

    def to_dict(self) -> dict:
        d = {
            "code": self.code,
            "subjects": list(self.subjects),
            "axiom": self.axiom,
            "premises": list(self.premises),
            "message": self.message,
        }
        if self.span is not None:
            d["span"] = {
                "file": self.span.file,
                "line": self.span.line,
                "col_start": self.span.col_start,
                "col_end": self.span.col_end,
            }
        return d


# Codes that make a run fail (exit status 1).
FAILING_CODES = frozenset(
    {
        "DOMAIN_VIOLATION",
        "FUNCTIONALITY_VIOLATION",
        "CROSS_BRANCH",
        "UNKNOWN_ENTITY",
        "UNKNOWN_CATEGORY",
        "DUPLICATE_ID",
        "UNRESOLVED_CLASS",
        "PDH_VIOLATION",
        "A4_VIOLATION",
        "CONTRADICTION",
        "HISTORY_VIOLATION",
        "MISSING_OSTR",
        "PARTICIPATION_VIOLATION",
    }
)


# ---------------------------------------------------------------------------
# Knowledge base
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    entities: Mapping[str, Entity]
    facts: tuple[Fact, ...]
    options: frozenset[str] = frozenset()
    classes: Mapping[str, str | None] = field(default_factory=dict)
    extents: Mapping[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    spans: Mapping[object, SourceSpan] = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def entity(self, eid: str) -> Entity:
        try:
            return self.entities[eid]
        except KeyError:
            raise KBError("UNKNOWN_ENTITY", f"{eid!r} is not declared") from None

    def category(self, eid: str) -> Category:
        return self.entity(eid).category

    def has_option(self, flag: str) -> bool:
        return flag in self.options

    def facts_of(self, relation: str) -> tuple[Fact, ...]:
        index = self._cache.get("by_relation")
        if index is None:
            index = {}
            for f in self.facts:
                index.setdefault(f.relation, []).append(f)
            index = {k: tuple(v) for k, v in index.items()}
            self._cache["by_relation"] = index
        return index.get(relation, ())

    def values(self, relation: str, subject: str) -> list[str]:
        """Second arguments of ``relation`` facts whose first argument is ``subject``."""
        return [f.args[1] for f in self.facts_of(relation) if f.args[0] == subject]

    def ids_in(self, category: Category | str) -> list[str]:
        cat = Category(category)
        return sorted(e.id for e in self.entities.values() if e.category.is_a(cat))

    def processes(self) -> list[str]:
        return self.ids_in(C.PROCESS)

    def fact_set(self) -> frozenset[Fact]:
        return frozenset(self.facts)

    def __contains__(self, item: Fact) -> bool:
        return item in self.fact_set()


def is_in_category(
    kb: KnowledgeBase,
    eid: str,
    category: Category | str,
    derived: Mapping[str, Iterable[Category]] | None = None,
) -> bool:
    """True iff the declared category descends from ``category`` or a classifier derived it.

    ``derived`` maps entity ids to categories produced by the classification
    module (see :func:`procid.classification.derived_categories`).
    """
    ent = kb.entity(eid)
    try:
        target = Category(category)
    except ValueError:
        raise KBError("UNKNOWN_CATEGORY", f"{category!r} is not a taxonomy category") from None
    if ent.category.is_a(target):
        return True
    if derived:
        found = derived.get(eid, ())
        return any(c.is_a(target) for c in getattr(found, "derived", found))
    return False


class KBBuilder:
    """Single-owner accumulator; :meth:`build` freezes it into a KnowledgeBase."""

    def __init__(self, options: Iterable[str] = ()) -> None:
        self.options = set(options)
        unknown = self.options - OPTION_FLAGS
        if unknown:
            raise KBError("UNKNOWN_OPTION", f"unknown option(s): {', '.join(sorted(unknown))}")
        self.entities: dict[str, Entity] = {}
        self.classes: dict[str, str | None] = {}
        self.extents: dict[str, tuple[Fraction, Fraction]] = {}
        self.facts: dict[Fact, None] = {}
        self.spans: dict[object, SourceSpan] = {}
        self._functional: dict[tuple[str, str], Fact] = {}

    def add_entity(self, eid: str, category: str | Category, label: str | None = None) -> Entity:
        if eid in self.entities:
            raise KBError("DUPLICATE_ID", f"entity {eid!r} declared twice")
        cat = lookup_category(category, self.options)
        ent = Entity(eid, cat, label)
        self.entities[eid] = ent
        return ent

    def declare_class(self, name: str, determinable: str | None = None) -> None:
        self.classes[name] = determinable

    def set_extent(self, tr: str, start, end) -> None:
        start, end = Fraction(start), Fraction(end)
        ent = self.entities.get(tr)
        if ent is None:
            raise KBError("UNKNOWN_ENTITY", f"interval for undeclared {tr!r}")
        if not ent.category.is_a(C.TEMPORAL_REGION):
            raise KBError("DOMAIN_VIOLATION", f"{tr!r} is not a TemporalRegion")
        if start > end:
            raise KBError("BAD_INTERVAL", f"interval {tr!r} has start > end")
        self.extents[tr] = (start, end)

    def _reject(self, code: str, f: Fact, message: str, arg_index: int | None = None):
        subjects = (f.args[arg_index],) if arg_index is not None else tuple(f.args)
        raise FactRejected(Diagnostic(code, subjects, message, premises=(f.id,)), arg_index)

    def assert_fact(self, f: Fact) -> str:
        """Validate and store ``f``; returns its fact id or raises FactRejected."""
        sig = SIGNATURES.get(f.relation)
        for i, a in enumerate(f.args):
            want = sig[i] if sig is not None else None
            if want == "class":
                continue
            if a not in self.entities:
                self._reject("UNKNOWN_ENTITY", f, f"{a!r} is not declared", i)
            if want is not None and not compatible(self.entities[a].category, want):
                self._reject(
                    "DOMAIN_VIOLATION",
                    f,
                    f"{f.relation} argument {i + 1} must be {want.value}, "
                    f"{a!r} is {self.entities[a].category.value}",
                    i,
                )
        if f.relation in ("P", "SUM"):
            self._check_branches(f)
        if f in self.facts:
            return f.id
        if f.relation in FUNCTIONAL:
            key = (f.relation, f.args[0])
            prior = self._functional.get(key)
            if prior is not None and prior.args[1:] != f.args[1:]:
                raise FactRejected(
                    Diagnostic(
                        "FUNCTIONALITY_VIOLATION",
                        (f.args[0],),
                        f"{f.relation} is functional: {f.args[0]!r} already maps to "
                        f"{prior.args[1]!r}, got {f.args[1]!r}",
                        premises=(prior.id, f.id),
                    )
                )
            self._functional[key] = f
        self.facts[f] = None
        return f.id

    def _check_branches(self, f: Fact) -> None:
        branches = {branch(self.entities[a].category) for a in f.args} - {None}
        if len(branches) > 1:
            self._reject("CROSS_BRANCH", f, f"{f.relation} mixes continuants and occurrents")

    def build(self) -> KnowledgeBase:
        return KnowledgeBase(
            entities=dict(self.entities),
            facts=tuple(self.facts),
            options=frozenset(self.options),
            classes=dict(self.classes),
            extents=dict(self.extents),
            spans=dict(self.spans),
        )


def rebuild(
    kb: KnowledgeBase,
    add: Iterable[Fact] = (),
    drop: Iterable[Fact] = (),
    options: Iterable[str] | None = None,
    entities: Iterable[Entity] = (),
) -> KnowledgeBase:
    """A revalidated copy of ``kb`` with facts added/removed and options replaced."""
    b = KBBuilder(kb.options if options is None else options)
    for e in list(kb.entities.values()) + list(entities):
        b.add_entity(e.id, e.category, e.label)
    for name, det in kb.classes.items():
        b.declare_class(name, det)
    for tr, (s, e) in kb.extents.items():
        b.set_extent(tr, s, e)
    dropped = set(drop)
    for f in list(kb.facts) + list(add):
        if f not in dropped:
            b.assert_fact(f)
    b.spans.update({k: v for k, v in kb.spans.items() if k not in dropped})
    return b.build()


def validate(kb: KnowledgeBase) -> list[Diagnostic]:
    """Replay every declaration and fact through a fresh builder."""
    out: list[Diagnostic] = []
    b = KBBuilder(kb.options)
    for e in kb.entities.values():
        try:
            b.add_entity(e.id, e.category, e.label)
        except KBError as exc:
            out.append(Diagnostic(exc.code, (e.id,), exc.message))
    for tr, (s, e) in kb.extents.items():
        try:
            b.set_extent(tr, s, e)
        except KBError as exc:
            out.append(Diagnostic(exc.code, (tr,), exc.message))
    for f in kb.facts:
        try:
            b.assert_fact(f)
        except FactRejected as exc:
            out.append(exc.diagnostic)
    return out


def same_time(kb: KnowledgeBase, t1: str, t2: str) -> bool:
    """Temporal-region equality by identifier or by equal extents."""
    if t1 == t2:
        return True
    e1, e2 = kb.extents.get(t1), kb.extents.get(t2)
    return e1 is not None and e1 == e2


def check_instantiation(kb: KnowledgeBase, state=None) -> list[Diagnostic]:
    """Unresolved class names and, under exclusive-determinates, same-time clashes."""
    out: list[Diagnostic] = []
    inst = kb.facts_of("INSTANCE_OF_AT")
    for f in inst:
        if f.args[1] not in kb.classes:
            out.append(
                Diagnostic(
                    "UNRESOLVED_CLASS",
                    (f.args[0],),
                    f"class {f.args[1]!r} is not declared",
                    premises=(f.id,),
                    span=kb.spans.get(f),
                )
            )
    if not kb.has_option("exclusive-determinates"):
        return out

    def at_same_time(a: str, b: str) -> bool:
        if same_time(kb, a, b):
            return True
        return state is not None and state.same(a, b)

    def same_bearer(a: str, b: str) -> bool:
        return a == b or (state is not None and state.same(a, b))

    seen = set()
    for i, f in enumerate(inst):
        for g in inst[i + 1 :]:
            if not same_bearer(f.args[0], g.args[0]) or f.args[1] == g.args[1]:
                continue
            det_f, det_g = kb.classes.get(f.args[1]), kb.classes.get(g.args[1])
            if det_f is None or det_f != det_g or not at_same_time(f.args[2], g.args[2]):
                continue
            key = tuple(sorted((f.id, g.id)))
            if key in seen:
                continue
            seen.add(key)
            out.append(
                Diagnostic(
                    "CONTRADICTION",
                    (f.args[0],),
                    f"{f.args[0]!r} instantiates two determinates of {det_f!r} "
                    f"({f.args[1]}, {g.args[1]}) at the same time",
                    axiom="EXCLUSIVE-DETERMINATES",
                    premises=key,
                )
            )
    return out
