"""Readable evaluation plans."""
from __future__ import annotations

from .ast import Aggregate, BinOp, Call, Const, Iri, Query, UnOp, Var
from .evaluate import _pushable


def show(e) -> str:
    if isinstance(e, Var):
        return str(e)
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, Iri):
            return f"<{v.id}>"
        if isinstance(v, bool):
            return "true" if v else "false"
        if hasattr(v, "value") and isinstance(v.value, str):
            return f'"{v.value}"'
        return str(v)
    if isinstance(e, BinOp):
        return f"({show(e.left)} {e.op} {show(e.right)})"
    if isinstance(e, UnOp):
        return f"{e.op}{show(e.operand)}"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(show(a) for a in e.args)})"
    if isinstance(e, Aggregate):
        inner = "*" if e.arg is None else show(e.arg)
        if e.distinct:
            inner = "DISTINCT " + inner
        if e.separator is not None:
            inner += f'; SEPARATOR="{e.separator}"'
        return f"{e.name}({inner})"
    return repr(e)


def _triple(tp) -> str:
    return " ".join(show(n) for n in (tp.s, tp.p, tp.o))


def explain(q: Query) -> str:
    lines = []
    early, late = _pushable(q)
    if not q.patterns:
        lines.append("scan: nothing")
    for tp in q.patterns:
        lines.append(f"scan: {_triple(tp)}")
    for f in early:
        lines.append(f"filter (pushed down): {show(f)}")
    for opt in q.optionals:
        lines.append("optional: " + " . ".join(_triple(tp) for tp in opt.patterns))
        for f in opt.filters:
            lines.append(f"  filter: {show(f.expr)}")
    for b in q.binds:
        lines.append(f"bind: {show(b.expr)} -> {b.var}")
    for f in late:
        lines.append(f"filter: {show(f)}")
    if q.group_by:
        lines.append("group by: " + " ".join(str(v) for v in q.group_by))
    elif q.grouped:
        lines.append("group by: (single group)")
    for a in q.aggregates:
        lines.append(f"aggregate: {show(a)}")
    for h in q.having:
        lines.append(f"having: {show(h)}")
    lines.append("project: " + ", ".join(
        str(p.expr) if isinstance(p.expr, Var) and p.expr.name == p.alias else f"{show(p.expr)} AS ?{p.alias}"
        for p in q.projections
    ))
    if q.order_by:
        keys = ", ".join(("DESC " if k.descending else "ASC ") + show(k.expr) for k in q.order_by)
        lines.append(f"sort: {keys} then full row")
    if q.distinct:
        lines.append("distinct")
    if q.offset:
        lines.append(f"offset: {q.offset}")
    if q.limit is not None:
        lines.append(f"limit: {q.limit}")
    return "\n".join(lines) + "\n"


__all__ = ["explain", "show"]
