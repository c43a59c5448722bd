from __future__ import annotations

from pathlib import Path

import pytest

from procid.kbformat import parse, parse_file

CORPUS = Path(__file__).resolve().parent.parent / "src" / "procid" / "corpus"
NEGATIVE = Path(__file__).resolve().parent / "negative"
GOLDEN = Path(__file__).resolve().parent / "golden"


def load(name: str, *options: str):
    kb, diags = parse_file(CORPUS / name, options)
    assert diags == [], diags
    return kb


def kb_of(text: str, *options: str):
    kb, diags = parse(text, "<test>", options)
    assert diags == [], diags
    return kb


@pytest.fixture
def sphere():
    return load("sphere.kb")


# acceptance criteria record one line each here; printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
