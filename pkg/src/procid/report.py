"""Report assembly and rendering (text and JSON)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core_model import FAILING_CODES, Diagnostic


@dataclass
class Report:
    diagnostics: list[Diagnostic] = field(default_factory=list)
    eq_classes: list[list[str]] = field(default_factory=list)
    criteria: list[dict] | None = None

    def __post_init__(self) -> None:
        self.diagnostics = sorted(set(self.diagnostics), key=Diagnostic.sort_key)
        self.eq_classes = sorted(sorted(c) for c in self.eq_classes)

    @property
    def exit_status(self) -> int:
        return 1 if any(d.code in FAILING_CODES for d in self.diagnostics) else 0

    def to_dict(self) -> dict:
        return {
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "eq_classes": self.eq_classes,
            "criteria": self.criteria or [],
            "exit_status": self.exit_status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = ["== diagnostics =="]
        for d in self.diagnostics:
            lines.append(
                "\t".join([d.code, ",".join(d.subjects), d.axiom or "-", d.message, str(d.span) if d.span else "-"])
            )
        if self.eq_classes:
            lines.append("== equality classes ==")
            lines += ["{" + ", ".join(c) + "}" for c in self.eq_classes]
        if self.criteria:
            lines.append("== criteria ==")
            cols = ("C1", "C2", "A5", "compositional")
            rows = [[f"{r['pair'][0]} ~ {r['pair'][1]}", *(r[c] for c in cols), "*" if r["disagreement"] else ""] for r in self.criteria]
            header = ["pair", *cols, "disagree"]
            widths = [max(len(str(x[i])) for x in rows + [header]) for i in range(len(header))]
            for row in [header] + rows:
                lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip())
        lines.append(f"status: {self.exit_status}")
        return "\n".join(lines) + "\n"


def parse_text_diagnostics(text: str) -> list[tuple[str, tuple[str, ...], str | None, str]]:
    """Read back the diagnostic block of a text report (code, subjects, axiom, message)."""
    out = []
    in_block = False
    for line in text.splitlines():
        if line.startswith("=="):
            in_block = line == "== diagnostics =="
            continue
        if line.startswith("status:"):
            break
        if in_block and line:
            code, subjects, axiom, message, _ = line.split("\t")
            out.append((code, tuple(s for s in subjects.split(",") if s), None if axiom == "-" else axiom, message))
    return out
