"""Triple graph built from a list of comparisons."""
from __future__ import annotations

from collections import defaultdict
from decimal import Decimal
from typing import Iterable

from ..model import PAPER_PREDICATE, Comparison, Number, Range, Resource, Text
from .ast import Iri

LABEL = "rdfs:label"
COMPARES = "compareContribution"


def term_key(t):
    """Identity key used for joins, DISTINCT and grouping."""
    if t is None:
        return None
    if isinstance(t, Iri):
        return ("iri", t.id)
    if isinstance(t, Text):
        return ("text", t.value)
    if isinstance(t, Number):
        return ("num", t.value, t.qualifier)
    if isinstance(t, Range):
        return ("range", t.lo, t.hi)
    if isinstance(t, bool):
        return ("bool", t)
    if isinstance(t, Decimal):
        return ("num", t, "none")
    raise TypeError(f"not a term: {t!r}")


class Graph:
    def __init__(self):
        self.triples: list[tuple] = []
        self._seen: set = set()
        self.by_s: dict = defaultdict(list)
        self.by_p: dict = defaultdict(list)
        self.by_sp: dict = defaultdict(list)

    def add(self, s: Iri, p: Iri, o):
        key = (s.id, p.id, term_key(o))
        if key in self._seen:
            return
        self._seen.add(key)
        t = (s, p, o)
        self.triples.append(t)
        self.by_s[s.id].append(t)
        self.by_p[p.id].append(t)
        self.by_sp[(s.id, p.id)].append(t)

    def __len__(self):
        return len(self.triples)

    def candidates(self, s=None, p=None) -> list[tuple]:
        if isinstance(s, Iri) and isinstance(p, Iri):
            return self.by_sp.get((s.id, p.id), [])
        if isinstance(s, Iri):
            return self.by_s.get(s.id, [])
        if isinstance(p, Iri):
            return self.by_p.get(p.id, [])
        if s is not None or p is not None:
            # a literal can never be a subject or predicate
            return []
        return self.triples


def build_graph(store: Iterable[Comparison]) -> Graph:
    g = Graph()
    label = Iri(LABEL)
    for c in store:
        cmp_iri = Iri(c.id)
        g.add(cmp_iri, label, Text(c.title))
        for p in c.properties:
            g.add(Iri(p.id), label, Text(p.label))
        for contrib in c.contributions:
            node = Iri(contrib.id)
            g.add(cmp_iri, Iri(COMPARES), node)
            g.add(node, Iri(PAPER_PREDICATE), Iri(contrib.paper_id))
            for p in c.properties:
                cell = contrib.cells.get(p.id)
                if cell is None:
                    continue
                if isinstance(cell, Resource):
                    g.add(node, Iri(p.id), Iri(cell.id))
                    g.add(Iri(cell.id), label, Text(cell.label))
                else:
                    g.add(node, Iri(p.id), cell)
    return g
