"""Triple graph grammar synchronization with short-cut repair rules."""

from __future__ import annotations

from .graph import Graph, PartialTripleGraph, TripleGraph, TripleTypeGraph, TypeGraph
from .rewriting import NAC, Rule, apply, find_matches
from .tgg import TGG, NotInLanguage, is_member, membership_by_translation

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "TripleGraph",
    "PartialTripleGraph",
    "TypeGraph",
    "TripleTypeGraph",
    "Rule",
    "NAC",
    "apply",
    "find_matches",
    "TGG",
    "NotInLanguage",
    "is_member",
    "membership_by_translation",
]
