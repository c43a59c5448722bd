"""Line-oriented knowledge-base format.

One statement per line, ``#`` starts a comment::

    option extended-simple
    class Temp60C determinable-of Temperature
    entity s1 : MaterialEntity "the sphere"
    interval t1 = [0, 5/2]
    fact PSDC(p_heat, temperature1)
    fact instanceOf(temperature1, Temp60C, t1)
    eq(a, b)
    neq(a, b)

Columns in source spans are 1-based; ``col_end`` is exclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .core_model import (
    OPTION_FLAGS,
    RELATIONS,
    Diagnostic,
    Fact,
    FactRejected,
    KBBuilder,
    KBError,
    KnowledgeBase,
    SourceSpan,
    arity_ok,
)

SURFACE = {"INSTANCE_OF_AT": "instanceOf", "LOCATED_AT": "locatedAt"}
FROM_SURFACE = {v: k for k, v in SURFACE.items()}
ID_STOP = set(" \t,()[]=:#\"")

HEADER = "# procid knowledge base (canonical form)"


class ParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        super().__init__("; ".join(f"{d.span}: {d.message}" for d in diagnostics))
        self.diagnostics = diagnostics


class _Syntax(Exception):
    """``col``/``end`` are 0-based offsets; ``end`` None means end of line."""

    def __init__(self, col: int, message: str, end: int | None = None) -> None:
        self.col = col
        self.message = message
        self.end = end


@dataclass
class Statement:
    kind: str
    span: SourceSpan
    values: dict = field(default_factory=dict)
    arg_spans: list[SourceSpan] = field(default_factory=list)


class _Cursor:
    """Scanner over one line; ``pos`` is a 0-based offset."""

    def __init__(self, text: str, file: str, line: int) -> None:
        self.text = text
        self.pos = 0
        self.file = file
        self.line = line

    def span(self, start: int, end: int) -> SourceSpan:
        return SourceSpan(self.file, self.line, start + 1, end + 1)

    def ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            got = self.peek() or "end of line"
            raise _Syntax(self.pos, f"expected {ch!r}, got {got!r}")
        self.pos += 1

    def ident(self, what: str = "identifier") -> tuple[str, SourceSpan]:
        self.ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ID_STOP:
            self.pos += 1
        if self.pos == start:
            raise _Syntax(start, f"expected {what}")
        return self.text[start : self.pos], self.span(start, self.pos)

    def rational(self) -> Fraction:
        self.ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in " \t,]":
            self.pos += 1
        token = self.text[start : self.pos]
        try:
            if "." in token or "e" in token.lower():
                raise ValueError
            return Fraction(token)
        except (ValueError, ZeroDivisionError):
            raise _Syntax(start, f"bad rational {token!r} (use integers or p/q)", self.pos) from None

    def string(self) -> str:
        self.ws()
        start = self.pos
        if self.peek() != '"':
            raise _Syntax(start, "expected quoted label")
        i = self.pos + 1
        while i < len(self.text):
            if self.text[i] == "\\":
                i += 2
                continue
            if self.text[i] == '"':
                break
            i += 1
        else:
            raise _Syntax(start, "unterminated label")
        self.pos = i + 1
        try:
            return json.loads(self.text[start : self.pos])
        except json.JSONDecodeError:
            raise _Syntax(start, "bad escape in label") from None

    def args(self) -> list[tuple[str, SourceSpan]]:
        self.expect("(")
        out = [self.ident("argument")]
        while self.peek() == ",":
            self.pos += 1
            out.append(self.ident("argument"))
        self.expect(")")
        return out


def _strip_comment(line: str) -> str:
    in_str = False
    escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and in_str:
            escaped = True
        elif ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def _statement(cur: _Cursor) -> Statement:
    cur.ws()
    start = cur.pos
    word, wspan = cur.ident("statement keyword")
    values: dict = {}
    arg_spans: list[SourceSpan] = []
    if word == "entity":
        values["id"], sp = cur.ident("entity id")
        arg_spans.append(sp)
        cur.expect(":")
        values["category"], sp = cur.ident("category")
        arg_spans.append(sp)
        if cur.peek() == '"':
            values["label"] = cur.string()
    elif word == "class":
        values["name"], _ = cur.ident("class name")
        if not cur.at_end():
            kw, kspan = cur.ident()
            if kw != "determinable-of":
                raise _Syntax(kspan.col_start - 1, f"expected 'determinable-of', got {kw!r}", kspan.col_end - 1)
            values["determinable"], _ = cur.ident("determinable class name")
    elif word == "option":
        values["flag"], sp = cur.ident("option flag")
        if values["flag"] not in OPTION_FLAGS:
            raise _Syntax(sp.col_start - 1, f"unknown option {values['flag']!r}", sp.col_end - 1)
    elif word == "interval":
        values["id"], sp = cur.ident("temporal region id")
        arg_spans.append(sp)
        cur.expect("=")
        cur.expect("[")
        values["start"] = cur.rational()
        cur.expect(",")
        values["end"] = cur.rational()
        cur.expect("]")
    elif word == "fact":
        rel, rspan = cur.ident("relation name")
        rel = FROM_SURFACE.get(rel, rel)
        if rel not in RELATIONS or rel in ("EQ", "NEQ"):
            raise _Syntax(rspan.col_start - 1, f"unknown relation {rel!r}", rspan.col_end - 1)
        args = cur.args()
        if not arity_ok(rel, len(args)):
            raise _Syntax(rspan.col_start - 1, f"wrong arity for {rel}: {len(args)} argument(s)", rspan.col_end - 1)
        values["relation"] = rel
        values["args"] = tuple(a for a, _ in args)
        arg_spans = [s for _, s in args]
    elif word in ("eq", "neq"):
        args = cur.args()
        if len(args) != 2:
            raise _Syntax(wspan.col_start - 1, f"{word} takes exactly two arguments", wspan.col_end - 1)
        values["relation"] = word.upper()
        word = "fact"
        values["args"] = tuple(a for a, _ in args)
        arg_spans = [s for _, s in args]
    else:
        raise _Syntax(start, f"unknown statement {word!r}", wspan.col_end - 1)
    if not cur.at_end():
        raise _Syntax(cur.pos, f"unexpected trailing text {cur.text[cur.pos:]!r}")
    return Statement(word, cur.span(start, len(cur.text.rstrip())), values, arg_spans)


def scan(text: str, file: str = "<string>") -> list[Statement]:
    """Syntax pass; raises ParseError listing every malformed line."""
    stmts: list[Statement] = []
    errors: list[Diagnostic] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).rstrip()
        if not body.strip():
            continue
        cur = _Cursor(body, file, lineno)
        try:
            stmts.append(_statement(cur))
        except _Syntax as exc:
            end = len(body) if exc.end is None else exc.end
            span = SourceSpan(file, lineno, exc.col + 1, end + 1)
            errors.append(Diagnostic("PARSE_ERROR", (), exc.message, span=span))
    if errors:
        raise ParseError(errors)
    return stmts


def parse(text: str, file: str = "<string>", options=()) -> tuple[KnowledgeBase, list[Diagnostic]]:
    """Parse and validate. Returns the KB of accepted statements and the validation findings.

    Syntax errors raise ParseError. ``options`` are merged with ``option`` lines.
    """
    stmts = scan(text, file)
    flags = set(options) | {s.values["flag"] for s in stmts if s.kind == "option"}
    b = KBBuilder(flags)
    diags: list[Diagnostic] = []

    def report(code, subjects, message, span, premises=()):
        diags.append(Diagnostic(code, tuple(subjects), message, premises=tuple(premises), span=span))

    for s in stmts:
        if s.kind == "class":
            b.declare_class(s.values["name"], s.values.get("determinable"))
    for s in stmts:
        if s.kind != "entity":
            continue
        v = s.values
        try:
            b.add_entity(v["id"], v["category"], v.get("label"))
            b.spans[v["id"]] = s.span
        except KBError as exc:
            span = s.arg_spans[1] if exc.code == "UNKNOWN_CATEGORY" else s.arg_spans[0]
            report(exc.code, [v["id"]], exc.message, span)
    for s in stmts:
        if s.kind != "interval":
            continue
        try:
            b.set_extent(s.values["id"], s.values["start"], s.values["end"])
        except KBError as exc:
            report(exc.code, [s.values["id"]], exc.message, s.arg_spans[0])
    for s in stmts:
        if s.kind != "fact":
            continue
        f = Fact(s.values["relation"], s.values["args"])
        try:
            b.assert_fact(f)
            b.spans.setdefault(f, s.span)
        except FactRejected as exc:
            d = exc.diagnostic
            span = s.span
            if exc.arg_index is not None:
                i = exc.arg_index
                if f.relation in ("EQ", "NEQ"):
                    # stored sorted; map back to the written position
                    i = s.values["args"].index(f.args[i])
                span = s.arg_spans[i]
            report(d.code, d.subjects, d.message, span, d.premises)
    return b.build(), diags


def parse_file(path, options=()) -> tuple[KnowledgeBase, list[Diagnostic]]:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path), options)


def _fmt_fact(f: Fact) -> str:
    if f.relation in ("EQ", "NEQ"):
        return f"{f.relation.lower()}({', '.join(f.args)})"
    return f"fact {SURFACE.get(f.relation, f.relation)}({', '.join(f.args)})"


def serialize(kb: KnowledgeBase) -> str:
    """Canonical text: options, classes, entities, intervals, then facts, each sorted."""
    lines = [HEADER]
    lines += [f"option {o}" for o in sorted(kb.options)]
    for name in sorted(kb.classes):
        det = kb.classes[name]
        lines.append(f"class {name}" + (f" determinable-of {det}" if det else ""))
    for eid in sorted(kb.entities):
        e = kb.entities[eid]
        label = f" {json.dumps(e.label, ensure_ascii=False)}" if e.label is not None else ""
        lines.append(f"entity {eid} : {e.category.value}{label}")
    for tr in sorted(kb.extents):
        s, e = kb.extents[tr]
        lines.append(f"interval {tr} = [{s}, {e}]")
    lines += [_fmt_fact(f) for f in sorted(kb.facts)]
    return "\n".join(lines) + "\n"
