"""Process classification and identity reasoning over finite BFO-style knowledge bases."""

from .core_model import Category, Diagnostic, Entity, Fact, KBBuilder, KBError, KnowledgeBase, fact
from .kbformat import ParseError, parse, parse_file, serialize
from .compositional import saturate

__all__ = [
    "Category",
    "Diagnostic",
    "Entity",
    "Fact",
    "KBBuilder",
    "KBError",
    "KnowledgeBase",
    "ParseError",
    "fact",
    "parse",
    "parse_file",
    "saturate",
    "serialize",
]
