"""Comparison tables as a small typed graph.

A comparison holds contributions (rows of a review table, each tied to a
source publication) described by a shared list of typed properties.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping, Union

NUMERIC = "numeric"
TEXT = "text"
RESOURCE = "resource"
KINDS = (NUMERIC, TEXT, RESOURCE)

# qualifier name -> printed prefix
QUALIFIERS = {"none": "", "approx": "~", "gt": ">", "lt": "<"}

PAPER_PREDICATE = "paper"


class SchemaError(ValueError):
    """Raised when a cell or contribution does not fit the comparison schema."""


@dataclass(frozen=True)
class Number:
    value: Decimal
    unit: str | None = None
    qualifier: str = "none"

    def __post_init__(self):
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if self.qualifier not in QUALIFIERS:
            raise ValueError(f"unknown qualifier {self.qualifier!r}")

    def __str__(self):
        return QUALIFIERS[self.qualifier] + format(self.value, "f")


@dataclass(frozen=True)
class Range:
    lo: Decimal
    hi: Decimal
    unit: str | None = None

    def __post_init__(self):
        for name in ("lo", "hi"):
            val = getattr(self, name)
            if not isinstance(val, Decimal):
                object.__setattr__(self, name, Decimal(str(val)))

    def __str__(self):
        return f"{format(self.lo, 'f')}--{format(self.hi, 'f')}"


@dataclass(frozen=True)
class Text:
    value: str

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Resource:
    id: str
    label: str

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class _Absent:
    def __str__(self):
        return ""

    def __repr__(self):
        return "Absent"


Absent = _Absent()

CellValue = Union[Number, Range, Text, Resource, _Absent]

# which cell variants each property kind accepts
_ACCEPTS = {
    NUMERIC: (Number, Range, Text),
    TEXT: (Text,),
    RESOURCE: (Resource,),
}


@dataclass(frozen=True)
class PropertyDef:
    id: str
    label: str
    kind: str = TEXT
    unit: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown property kind {self.kind!r}")
        if self.kind == NUMERIC and self.unit is None:
            object.__setattr__(self, "unit", "")


@dataclass
class Contribution:
    id: str
    paper_id: str
    cells: dict[str, CellValue] = field(default_factory=dict)


@dataclass
class Comparison:
    id: str
    title: str
    properties: list[PropertyDef] = field(default_factory=list)
    contributions: list[Contribution] = field(default_factory=list)

    def prop(self, pid: str) -> PropertyDef:
        for p in self.properties:
            if p.id == pid:
                return p
        raise KeyError(f"unknown property {pid!r}")

    def contribution(self, cid: str) -> Contribution:
        for c in self.contributions:
            if c.id == cid:
                return c
        raise KeyError(f"unknown contribution {cid!r}")

    def __eq__(self, other):
        # contribution order is not part of identity
        if not isinstance(other, Comparison):
            return NotImplemented
        key = lambda c: c.id  # noqa: E731
        return (
            self.id == other.id
            and self.title == other.title
            and self.properties == other.properties
            and sorted(self.contributions, key=key) == sorted(other.contributions, key=key)
        )


def create_comparison(title: str, properties: Iterable[PropertyDef], id: str = "") -> Comparison:
    props = list(properties)
    seen = set()
    for p in props:
        if p.id in seen:
            raise SchemaError(f"duplicate property id {p.id!r}")
        seen.add(p.id)
    return Comparison(id=id or title, title=title, properties=props)


def _fit_cell(prop: PropertyDef, cell: CellValue) -> CellValue:
    if cell is Absent:
        return cell
    if not isinstance(cell, _ACCEPTS[prop.kind]):
        raise SchemaError(f"{type(cell).__name__} cell on {prop.kind} property {prop.id!r}")
    if isinstance(cell, (Number, Range)):
        if cell.unit is None:
            cell = _with_unit(cell, prop.unit)
        elif cell.unit != prop.unit:
            raise SchemaError(f"unit {cell.unit!r} does not match {prop.unit!r} on {prop.id!r}")
    if isinstance(cell, Range) and cell.lo > cell.hi:
        raise SchemaError(f"range {cell} on {prop.id!r} has lo > hi")
    return cell


def _with_unit(cell, unit):
    if isinstance(cell, Number):
        return Number(cell.value, unit, cell.qualifier)
    return Range(cell.lo, cell.hi, unit)


def add_contribution(
    c: Comparison,
    paper_id: str,
    cells: Mapping[str, CellValue],
    id: str | None = None,
) -> str:
    if not paper_id:
        raise SchemaError("contribution needs a paper id")
    cid = id or f"C{len(c.contributions) + 1}"
    if any(x.id == cid for x in c.contributions):
        raise SchemaError(f"duplicate contribution id {cid!r}")
    fitted = {}
    for pid, cell in cells.items():
        try:
            prop = c.prop(pid)
        except KeyError:
            raise SchemaError(f"unknown property id {pid!r}") from None
        cell = _fit_cell(prop, cell)
        if cell is not Absent:
            fitted[pid] = cell
    c.contributions.append(Contribution(cid, paper_id, fitted))
    return cid


def get_cell(c: Comparison, contribution_id: str, property_id: str) -> CellValue:
    contrib = c.contribution(contribution_id)
    c.prop(property_id)
    return contrib.cells.get(property_id, Absent)


def to_triples(c: Comparison) -> list[tuple[str, str, object]]:
    """Flatten to (subject, predicate, object) triples.

    Cell objects are the CellValue itself so nothing is lost; the source
    publication link uses the ``paper`` predicate with its id as object.
    """
    out = []
    order = [p.id for p in c.properties]
    for contrib in c.contributions:
        for pid in order:
            cell = contrib.cells.get(pid, Absent)
            if cell is not Absent:
                out.append((contrib.id, pid, cell))
        out.append((contrib.id, PAPER_PREDICATE, contrib.paper_id))
    return out


def from_triples(triples, id: str, title: str, properties: Iterable[PropertyDef]) -> Comparison:
    c = create_comparison(title, properties, id=id)
    papers: dict[str, str] = {}
    cells: dict[str, dict[str, CellValue]] = {}
    order: list[str] = []
    for s, p, o in triples:
        if s not in cells:
            cells[s] = {}
            order.append(s)
        if p == PAPER_PREDICATE:
            papers[s] = o
        else:
            if p in cells[s]:
                raise SchemaError(f"two values for {p!r} on {s!r}")
            cells[s][p] = o
    for s in order:
        add_contribution(c, papers.get(s, ""), cells[s], id=s)
    return c


def validate(c: Comparison) -> list[str]:
    problems = []
    ids = [p.id for p in c.properties]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    for d in dupes:
        problems.append(f"duplicate property id {d!r}")
    known = {p.id: p for p in c.properties}
    for p in c.properties:
        if p.kind == NUMERIC and p.unit is None:
            problems.append(f"numeric property {p.id!r} has no unit label")
    for contrib in c.contributions:
        if not contrib.paper_id:
            problems.append(f"contribution {contrib.id!r} has no paper id")
        for pid, cell in contrib.cells.items():
            prop = known.get(pid)
            if prop is None:
                problems.append(f"contribution {contrib.id!r} uses undeclared property {pid!r}")
                continue
            if cell is Absent:
                continue
            if not isinstance(cell, _ACCEPTS[prop.kind]):
                problems.append(f"{contrib.id!r}/{pid!r}: {type(cell).__name__} on {prop.kind} property")
            if isinstance(cell, Range) and cell.lo > cell.hi:
                problems.append(f"{contrib.id!r}/{pid!r}: range {cell} has lo > hi")
    return problems
