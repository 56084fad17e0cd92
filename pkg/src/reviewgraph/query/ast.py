"""Query syntax tree."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass(frozen=True)
class Iri:
    id: str

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


@dataclass(frozen=True)
class Const:
    value: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class Aggregate:
    name: str
    arg: "Expr | None"  # None means COUNT(*)
    distinct: bool = False
    separator: str | None = None


Expr = Union[Var, Const, BinOp, UnOp, Call, Aggregate]
Node = Union[Var, Const]


@dataclass(frozen=True)
class TriplePattern:
    s: Node
    p: Node
    o: Node


@dataclass(frozen=True)
class Bind:
    expr: Expr
    var: Var


@dataclass(frozen=True)
class Filter:
    expr: Expr


@dataclass
class OptionalGroup:
    patterns: list[TriplePattern] = field(default_factory=list)
    filters: list[Filter] = field(default_factory=list)


@dataclass(frozen=True)
class Projection:
    expr: Expr
    alias: str


@dataclass(frozen=True)
class OrderKey:
    expr: Expr
    descending: bool = False


@dataclass
class Query:
    prefixes: dict[str, str] = field(default_factory=dict)
    projections: list[Projection] = field(default_factory=list)
    distinct: bool = False
    patterns: list[TriplePattern] = field(default_factory=list)
    optionals: list[OptionalGroup] = field(default_factory=list)
    binds: list[Bind] = field(default_factory=list)
    filters: list[Filter] = field(default_factory=list)
    group_by: list[Var] = field(default_factory=list)
    having: list[Expr] = field(default_factory=list)
    order_by: list[OrderKey] = field(default_factory=list)
    limit: int | None = None
    offset: int = 0

    @property
    def aggregates(self) -> list[Aggregate]:
        found: list[Aggregate] = []
        for p in self.projections:
            found.extend(a for a in walk(p.expr) if isinstance(a, Aggregate))
        for h in self.having:
            found.extend(a for a in walk(h) if isinstance(a, Aggregate))
        return found

    @property
    def grouped(self) -> bool:
        return bool(self.group_by) or bool(self.aggregates)


def walk(expr):
    """Yield every node of an expression tree, parents first."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        if isinstance(e, BinOp):
            stack += [e.right, e.left]
        elif isinstance(e, UnOp):
            stack.append(e.operand)
        elif isinstance(e, Call):
            stack += reversed(e.args)
        elif isinstance(e, Aggregate) and e.arg is not None:
            stack.append(e.arg)


def variables(expr) -> list[str]:
    out = []
    for e in walk(expr):
        if isinstance(e, Var) and e.name not in out:
            out.append(e.name)
    return out


def pattern_vars(tp: TriplePattern) -> list[str]:
    return [n.name for n in (tp.s, tp.p, tp.o) if isinstance(n, Var)]
