"""Deterministic evaluation of parsed queries over a comparison store."""
from __future__ import annotations

import functools
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, ROUND_HALF_UP, Context, Decimal, InvalidOperation
from typing import Iterable

from ..model import Comparison, Number, Range, Text
from ..tableio import ResultTable, _STRICT_RE
from .ast import Aggregate, BinOp, Call, Const, Iri, Query, UnOp, Var, pattern_vars, variables, walk
from .graph import Graph, build_graph, term_key

CTX = Context(prec=28, rounding=ROUND_HALF_EVEN)


class EvalError(Exception):
    """Expression could not be evaluated; the caller decides what that means."""


class DivisionByZero(EvalError):
    pass


# -- term helpers -------------------------------------------------------------


def _num(t) -> Decimal:
    if isinstance(t, Number):
        return t.value
    raise EvalError(f"not a number: {t!r}")


def _bounds(t) -> tuple[Decimal, Decimal]:
    if isinstance(t, Number):
        return t.value, t.value
    if isinstance(t, Range):
        return t.lo, t.hi
    raise EvalError(f"not numeric: {t!r}")


def _is_numeric(t) -> bool:
    return isinstance(t, (Number, Range))


def _string(t) -> str:
    if isinstance(t, Text):
        return t.value
    if isinstance(t, (Number, Range)):
        return str(t)
    raise EvalError(f"not a string: {t!r}")


def _ebv(t) -> bool:
    if isinstance(t, bool):
        return t
    if isinstance(t, Number):
        return t.value != 0
    if isinstance(t, Text):
        return t.value != ""
    raise EvalError(f"no boolean value for {t!r}")


def _equal(a, b) -> bool:
    if _is_numeric(a) and _is_numeric(b):
        if isinstance(a, Range) and isinstance(b, Range):
            return a.lo == b.lo and a.hi == b.hi
        if isinstance(a, Range):
            return a.lo <= b.value <= a.hi
        if isinstance(b, Range):
            return b.lo <= a.value <= b.hi
        return a.value == b.value
    if type(a) is not type(b):
        return False
    return term_key(a) == term_key(b)


def _compare(op: str, a, b) -> bool:
    if _is_numeric(a) and _is_numeric(b):
        alo, ahi = _bounds(a)
        blo, bhi = _bounds(b)
        # ranges qualify if any part of them satisfies the bound
        if op == "<":
            return alo < bhi
        if op == "<=":
            return alo <= bhi
        if op == ">":
            return ahi > blo
        return ahi >= blo
    if isinstance(a, Text) and isinstance(b, Text):
        x, y = a.value, b.value
    else:
        raise EvalError(f"cannot order {a!r} and {b!r}")
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def _arith(op: str, a, b) -> Number:
    x, y = _num(a), _num(b)
    if op == "+":
        return Number(CTX.add(x, y))
    if op == "-":
        return Number(CTX.subtract(x, y))
    if op == "*":
        return Number(CTX.multiply(x, y))
    if y == 0:
        raise DivisionByZero("division by zero")
    return Number(CTX.divide(x, y))


def _round(x: Decimal, places: int, rounding=ROUND_HALF_UP) -> Decimal:
    try:
        return x.quantize(Decimal(1).scaleb(-places), rounding=rounding, context=CTX)
    except InvalidOperation as exc:
        raise EvalError(str(exc)) from None


def _int_arg(t) -> int:
    v = _num(t)
    if v != v.to_integral_value():
        raise EvalError("expected an integer")
    return int(v)


def _plain(d: Decimal) -> Decimal:
    d = d.normalize(CTX)
    # normalize turns 100 into 1E+2; keep fixed notation
    return d.quantize(Decimal(1)) if d.as_tuple().exponent > 0 else d


# -- expression evaluation ----------------------------------------------------


class Env:
    """Variable scope for one row, optionally carrying its group."""

    __slots__ = ("values", "group")

    def __init__(self, values: dict, group: list | None = None):
        self.values = values
        self.group = group


def evaluate_expr(e, env: Env):
    if isinstance(e, Var):
        if e.name not in env.values:
            raise EvalError(f"?{e.name} unbound")
        return env.values[e.name]
    if isinstance(e, Const):
        return e.value
    if isinstance(e, BinOp):
        if e.op in ("&&", "||"):
            return _logic(e, env)
        a = evaluate_expr(e.left, env)
        b = evaluate_expr(e.right, env)
        if e.op == "=":
            return _equal(a, b)
        if e.op == "!=":
            return not _equal(a, b)
        if e.op in ("<", "<=", ">", ">="):
            return _compare(e.op, a, b)
        return _arith(e.op, a, b)
    if isinstance(e, UnOp):
        v = evaluate_expr(e.operand, env)
        if e.op == "!":
            return not _ebv(v)
        if e.op == "-":
            return Number(-_num(v))
        return Number(_num(v))
    if isinstance(e, Call):
        return _call(e, env)
    if isinstance(e, Aggregate):
        if env.group is None:
            raise EvalError(f"{e.name} outside a group")
        return _aggregate(e, env.group)
    raise EvalError(f"cannot evaluate {e!r}")


def _logic(e: BinOp, env: Env):
    def side(x):
        try:
            return _ebv(evaluate_expr(x, env))
        except DivisionByZero:
            raise
        except EvalError:
            return None

    a, b = side(e.left), side(e.right)
    if e.op == "&&":
        if a is False or b is False:
            return False
        if a is None or b is None:
            raise EvalError("&& over an error")
        return True
    if a is True or b is True:
        return True
    if a is None or b is None:
        raise EvalError("|| over an error")
    return False


def _call(e: Call, env: Env):
    name = e.name
    if name == "BOUND":
        return e.args[0].name in env.values
    if name == "IF":
        cond = _ebv(evaluate_expr(e.args[0], env))
        return evaluate_expr(e.args[1] if cond else e.args[2], env)
    if name == "COALESCE":
        for a in e.args:
            try:
                return evaluate_expr(a, env)
            except DivisionByZero:
                raise
            except EvalError:
                continue
        raise EvalError("COALESCE: no bound argument")
    args = [evaluate_expr(a, env) for a in e.args]
    if name == "STR":
        t = args[0]
        return Text(t.id) if isinstance(t, Iri) else Text(_string(t))
    if name == "LCASE":
        return Text(_string(args[0]).lower())
    if name == "UCASE":
        return Text(_string(args[0]).upper())
    if name == "STRLEN":
        return Number(Decimal(len(_string(args[0]))))
    if name == "CONTAINS":
        return _string(args[1]) in _string(args[0])
    if name == "STRSTARTS":
        return _string(args[0]).startswith(_string(args[1]))
    if name == "STRENDS":
        return _string(args[0]).endswith(_string(args[1]))
    if name == "CONCAT":
        return Text("".join(_string(a) for a in args))
    if name == "ABS":
        return Number(abs(_num(args[0])))
    if name == "FLOOR":
        return Number(_round(_num(args[0]), 0, ROUND_FLOOR))
    if name == "CEIL":
        return Number(_round(_num(args[0]), 0, ROUND_CEILING))
    if name == "ROUND":
        places = _int_arg(args[1]) if len(args) > 1 else 0
        return Number(_plain(_round(_num(args[0]), places)))
    if name == "FIXED":
        return Number(_round(_num(args[0]), _int_arg(args[1])))
    if name in ("LO", "HI"):
        lo, hi = _bounds(args[0])
        return Number(lo if name == "LO" else hi)
    if name == "NUM":
        t = args[0]
        if isinstance(t, Number):
            return Number(t.value)
        if isinstance(t, Text) and _STRICT_RE.fullmatch(t.value.strip()):
            return Number(Decimal(t.value.strip()))
        raise EvalError(f"NUM: {t!r} is not a number")
    raise EvalError(f"unknown function {name}")


def _aggregate(a: Aggregate, group: list[dict]):
    if a.name == "COUNT" and a.arg is None:
        if a.distinct:
            return Number(Decimal(len({_row_key(s) for s in group})))
        return Number(Decimal(len(group)))
    values = []
    for s in group:
        try:
            values.append(evaluate_expr(a.arg, Env(s)))
        except DivisionByZero:
            continue
        except EvalError:
            continue
    if a.distinct:
        seen, kept = set(), []
        for v in values:
            k = term_key(v)
            if k not in seen:
                seen.add(k)
                kept.append(v)
        values = kept
    if a.name == "COUNT":
        return Number(Decimal(len(values)))
    if a.name == "SAMPLE":
        if not values:
            raise EvalError("SAMPLE over no values")
        return values[0]
    if a.name == "GROUP_CONCAT":
        sep = "; " if a.separator is None else a.separator
        return Text(sep.join(_string(v) if not isinstance(v, Iri) else v.id for v in values))
    nums = [v.value for v in values if isinstance(v, Number)]
    if not nums:
        raise EvalError(f"{a.name} over no numeric values")
    if a.name == "MIN":
        return Number(min(nums))
    if a.name == "MAX":
        return Number(max(nums))
    total = functools.reduce(CTX.add, nums, Decimal(0))
    if a.name == "SUM":
        return Number(total)
    return Number(CTX.divide(total, Decimal(len(nums))))


def _row_key(values: dict) -> tuple:
    return tuple(sorted((k, term_key(v)) for k, v in values.items()))


# -- ordering -----------------------------------------------------------------


def sort_key(t) -> tuple:
    """Total order: unbound < boolean < numbers and ranges < text < IRIs."""
    if t is None:
        return (0,)
    if isinstance(t, bool):
        return (1, int(t))
    if isinstance(t, Number):
        return (2, t.value, t.value, t.qualifier)
    if isinstance(t, Range):
        return (2, t.lo, t.hi, "")
    if isinstance(t, Text):
        return (3, t.value)
    if isinstance(t, Iri):
        return (4, t.id)
    raise TypeError(f"not a term: {t!r}")


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


# -- evaluation ---------------------------------------------------------------


def _match(graph: Graph, tp, sol: dict):
    def resolve(node):
        if isinstance(node, Var):
            return sol.get(node.name)
        return node.value

    s, p, o = resolve(tp.s), resolve(tp.p), resolve(tp.o)
    okey = term_key(o) if o is not None else None
    for ts, tpred, to in graph.candidates(s, p):
        if s is not None and ts != s:
            continue
        if p is not None and tpred != p:
            continue
        if o is not None and term_key(to) != okey:
            continue
        new = dict(sol)
        ok = True
        for node, val in ((tp.s, ts), (tp.p, tpred), (tp.o, to)):
            if isinstance(node, Var):
                have = new.get(node.name)
                if have is None:
                    new[node.name] = val
                elif term_key(have) != term_key(val):
                    ok = False
                    break
        if ok:
            yield new


def _passes(expr, values: dict) -> bool:
    try:
        return _ebv(evaluate_expr(expr, Env(values)))
    except EvalError:
        return False


def _bgp(graph: Graph, patterns, sols: list[dict], filters) -> list[dict]:
    pending = list(filters)
    for tp in patterns:
        sols = [new for sol in sols for new in _match(graph, tp, sol)]
        if pending and sols:
            bound = set(sols[0])
            ready = [f for f in pending if set(variables(f)) <= bound]
            for f in ready:
                sols = [s for s in sols if _passes(f, s)]
                pending.remove(f)
    for f in pending:
        sols = [s for s in sols if _passes(f, s)]
    return sols


def _pushable(q: Query):
    mandatory = {v for tp in q.patterns for v in pattern_vars(tp)}
    early, late = [], []
    for f in q.filters:
        vs = set(variables(f.expr))
        uses_bound = any(isinstance(n, Call) and n.name == "BOUND" for n in walk(f.expr))
        (early if vs <= mandatory and not uses_bound else late).append(f.expr)
    return early, late


def solutions(q: Query, graph: Graph) -> list[dict]:
    """Solution sequence after patterns, OPTIONALs, BINDs and FILTERs."""
    early, late = _pushable(q)
    sols = _bgp(graph, q.patterns, [{}], early)
    for opt in q.optionals:
        out = []
        opt_filters = [f.expr for f in opt.filters]
        for sol in sols:
            ext = [sol]
            for tp in opt.patterns:
                ext = [new for s in ext for new in _match(graph, tp, s)]
            ext = [s for s in ext if all(_passes(f, s) for f in opt_filters)]
            out.extend(ext or [sol])
        sols = out
    for b in q.binds:
        out = []
        for sol in sols:
            try:
                sol = {**sol, b.var.name: evaluate_expr(b.expr, Env(sol))}
            except DivisionByZero:
                continue
            except EvalError:
                pass
            out.append(sol)
        sols = out
    for f in late:
        sols = [s for s in sols if _passes(f, s)]
    return sols


def _groups(q: Query, sols: list[dict]) -> list[tuple[dict, list[dict]]]:
    if not q.grouped:
        return [(s, None) for s in sols]
    if not q.group_by:
        return [({}, sols)]
    order: list = []
    buckets: dict = {}
    for s in sols:
        key = tuple(term_key(s.get(v.name)) for v in q.group_by)
        if key not in buckets:
            buckets[key] = []
            order.append((key, {v.name: s[v.name] for v in q.group_by if v.name in s}))
        buckets[key].append(s)
    return [(values, buckets[key]) for key, values in order]


def output_value(t):
    """Map a term onto a ResultTable cell value."""
    if t is None:
        return None
    if isinstance(t, bool):
        return "true" if t else "false"
    if isinstance(t, Iri):
        return t.id
    if isinstance(t, Number) and t.qualifier == "none":
        return t.value
    return str(t)


def _as_graph(store) -> Graph:
    if isinstance(store, Graph):
        return store
    return build_graph(store)


def evaluate(q: Query, store) -> ResultTable:
    graph = _as_graph(store)
    columns = [p.alias for p in q.projections]
    rows = []
    for values, group in _groups(q, solutions(q, graph)):
        env = Env(dict(values), group)
        if not all(_having(h, env) for h in q.having):
            continue
        terms = []
        for p in q.projections:
            try:
                t = evaluate_expr(p.expr, env)
            except EvalError:
                t = None
            if t is not None:
                env.values[p.alias] = t
            terms.append(t)
        rows.append((terms, env))
    if q.order_by:
        rows = _order(q, rows)
    if q.distinct:
        seen, kept = set(), []
        for terms, env in rows:
            key = tuple(term_key(t) for t in terms)
            if key not in seen:
                seen.add(key)
                kept.append((terms, env))
        rows = kept
    rows = rows[q.offset:]
    if q.limit is not None:
        rows = rows[: q.limit]
    return ResultTable(columns, [[output_value(t) for t in terms] for terms, _ in rows])


def _having(expr, env: Env) -> bool:
    try:
        return _ebv(evaluate_expr(expr, env))
    except EvalError:
        return False


def _order(q: Query, rows):
    keyed = []
    for terms, env in rows:
        ks = []
        for k in q.order_by:
            try:
                ks.append(sort_key(evaluate_expr(k.expr, env)))
            except EvalError:
                ks.append(sort_key(None))
        keyed.append((ks, [sort_key(t) for t in terms], terms, env))

    def compare(x, y):
        for k, a, b in zip(q.order_by, x[0], y[0]):
            c = _cmp(a, b)
            if c:
                return -c if k.descending else c
        return _cmp(x[1], y[1])

    keyed.sort(key=functools.cmp_to_key(compare))
    return [(terms, env) for _, _, terms, env in keyed]


def evaluate_join(q: Query, *stores: Iterable[Comparison], join_keys: Iterable[str] = ()) -> ResultTable:
    """Evaluate a cross-table query over the union of several stores.

    Each join key must occur in at least two mandatory triple patterns, so the
    join is an inner join on the shared value.
    """
    for key in join_keys:
        name = key.lstrip("?$")
        uses = sum(name in pattern_vars(tp) for tp in q.patterns)
        if uses < 2:
            raise ValueError(f"join key ?{name} is not shared by two patterns")
    merged: list[Comparison] = []
    seen: set[str] = set()
    for store in stores:
        for c in store:
            if c.id not in seen:
                seen.add(c.id)
                merged.append(c)
    return evaluate(q, merged)
