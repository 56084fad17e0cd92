"""Tokenizer and recursive-descent parser for the supported SPARQL subset."""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal

from ..model import Number, Text
from .ast import (
    Aggregate,
    BinOp,
    Bind,
    Call,
    Const,
    Filter,
    Iri,
    OptionalGroup,
    OrderKey,
    Projection,
    Query,
    TriplePattern,
    UnOp,
    Var,
    pattern_vars,
    variables,
    walk,
)

ORKG_PREDICATE = "http://orkg.org/orkg/predicate/"
ORKG_RESOURCE = "http://orkg.org/orkg/resource/"
ORKG_CLASS = "http://orkg.org/orkg/class/"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"

AGGREGATES = {"COUNT", "SUM", "AVG", "MIN", "MAX", "GROUP_CONCAT", "SAMPLE"}
FUNCTIONS = {
    # name: (min args, max args)
    "BOUND": (1, 1),
    "IF": (3, 3),
    "COALESCE": (1, None),
    "STR": (1, 1),
    "LCASE": (1, 1),
    "UCASE": (1, 1),
    "STRLEN": (1, 1),
    "CONTAINS": (2, 2),
    "STRSTARTS": (2, 2),
    "STRENDS": (2, 2),
    "CONCAT": (1, None),
    "ABS": (1, 1),
    "ROUND": (1, 2),
    "FIXED": (2, 2),
    "FLOOR": (1, 1),
    "CEIL": (1, 1),
    "LO": (1, 1),
    "HI": (1, 1),
    "NUM": (1, 1),
}
KEYWORDS = {
    "PREFIX", "SELECT", "DISTINCT", "REDUCED", "WHERE", "OPTIONAL", "FILTER", "BIND",
    "AS", "GROUP", "BY", "HAVING", "ORDER", "ASC", "DESC", "LIMIT", "OFFSET", "SEPARATOR",
}


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\s]*>"),
    ("VAR", r"[?$][A-Za-z_][A-Za-z0-9_]*"),
    ("PNAME", r"(?:[A-Za-z][\w-]*)?:(?:[\w-]+(?:\.[\w-]+)*)?"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\''),
    ("NUMBER", r"\d+\.\d+|\d+|\.\d+"),
    ("OP", r"&&|\|\||!=|<=|>=|[=<>!+\-*/(){}.,;≤≥≠]"),
    ("NAME", r"[A-Za-z_][A-Za-z0-9_]*"),
]
_MASTER = re.compile("|".join(f"(?P<{k}>{p})" for k, p in _TOKEN_SPEC))
_UNICODE_OPS = {"≤": "<=", "≥": ">=", "≠": "!="}
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\"}


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("WS", "COMMENT"):
            if kind == "OP":
                chunk = _UNICODE_OPS.get(chunk, chunk)
            elif kind == "NAME" and chunk.upper() in KEYWORDS | {"TRUE", "FALSE"}:
                chunk = chunk.upper()
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n") if kind in ("WS", "COMMENT") else 0
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


def localize(iri: str) -> str:
    """Map a full IRI onto the local ids used by the graph store."""
    for ns in (ORKG_PREDICATE, ORKG_RESOURCE, ORKG_CLASS):
        if iri.startswith(ns):
            return iri[len(ns):]
    if iri.startswith(RDFS):
        return "rdfs:" + iri[len(RDFS):]
    if iri.startswith(RDF):
        return "rdf:" + iri[len(RDF):]
    return iri


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return QuerySyntaxError(message, tok.line, tok.col)

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("OP", "NAME") and self.tok.text in texts

    def accept(self, *texts: str) -> Token | None:
        if self.at(*texts):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of query"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of query"
            raise self.error(f"expected {what}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    # -- grammar
    def parse(self) -> Query:
        q = Query()
        while self.accept("PREFIX"):
            name = self.expect_kind("PNAME", "prefix name")
            if not name.text.endswith(":"):
                raise self.error("prefix name must end with ':'", name)
            iri = self.expect_kind("IRIREF", "namespace IRI")
            self.prefixes[name.text[:-1]] = iri.text[1:-1]
        q.prefixes = dict(self.prefixes)
        self.expect("SELECT")
        if self.accept("DISTINCT"):
            q.distinct = True
        else:
            self.accept("REDUCED")
        star = self.accept("*") is not None
        while not star and (self.tok.kind == "VAR" or self.at("(")):
            q.projections.append(self.projection())
        if not star and not q.projections:
            raise self.error("SELECT needs at least one projection")
        self.accept("WHERE")
        self.group(q)
        self.modifiers(q)
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r} after query")
        if star:
            q.projections = [Projection(Var(v), v) for v in scope(q)]
        check(q)
        return q

    def projection(self) -> Projection:
        if self.tok.kind == "VAR":
            v = self.var()
            return Projection(v, v.name)
        self.expect("(")
        e = self.expr()
        self.expect("AS")
        v = self.var()
        self.expect(")")
        return Projection(e, v.name)

    def var(self) -> Var:
        return Var(self.expect_kind("VAR", "variable").text[1:])

    def group(self, q: Query):
        self.expect("{")
        while not self.accept("}"):
            if self.tok.kind == "EOF":
                raise self.error("unterminated group, expected '}'")
            if self.accept("OPTIONAL"):
                opt = OptionalGroup()
                self.expect("{")
                while not self.accept("}"):
                    if self.accept("FILTER"):
                        opt.filters.append(Filter(self.constraint()))
                    elif self.at("OPTIONAL", "BIND"):
                        raise self.error(f"{self.tok.text} is not supported inside OPTIONAL")
                    elif not self.accept("."):
                        opt.patterns.extend(self.triples())
                if not opt.patterns:
                    raise self.error("empty OPTIONAL group")
                q.optionals.append(opt)
            elif self.accept("FILTER"):
                q.filters.append(Filter(self.constraint()))
            elif self.accept("BIND"):
                self.expect("(")
                e = self.expr()
                self.expect("AS")
                v = self.var()
                self.expect(")")
                q.binds.append(Bind(e, v))
            elif not self.accept("."):
                q.patterns.extend(self.triples())

    def triples(self) -> list[TriplePattern]:
        out = []
        s = self.node("subject")
        while True:
            p = self.node("predicate")
            while True:
                o = self.node("object")
                out.append(TriplePattern(s, p, o))
                if not self.accept(","):
                    break
            if not self.accept(";"):
                break
            if self.at(".", "}"):
                break
        if not self.at("}", "FILTER", "OPTIONAL", "BIND"):
            self.expect(".")
        return out

    def node(self, role: str):
        tok = self.tok
        if tok.kind == "VAR":
            return self.var()
        if tok.kind in ("IRIREF", "PNAME"):
            return Const(self.iri())
        if tok.kind == "NAME" and tok.text == "a" and role == "predicate":
            self.i += 1
            return Const(Iri("rdf:type"))
        if role == "object" and tok.kind in ("STRING", "NUMBER") or self.at("-", "TRUE", "FALSE"):
            if role != "object":
                raise self.error(f"literal not allowed as {role}")
            return Const(self.literal())
        found = tok.text or "end of query"
        raise self.error(f"expected {role}, found {found!r}")

    def iri(self) -> Iri:
        tok = self.tok
        self.i += 1
        if tok.kind == "IRIREF":
            return Iri(localize(tok.text[1:-1]))
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise self.error(f"unknown prefix {prefix!r}", tok)
        return Iri(localize(self.prefixes[prefix] + local))

    def literal(self):
        if self.accept("TRUE"):
            return True
        if self.accept("FALSE"):
            return False
        neg = self.accept("-") is not None
        tok = self.tok
        if tok.kind == "NUMBER":
            self.i += 1
            value = Decimal(tok.text)
            return Number(-value if neg else value)
        if tok.kind == "STRING" and not neg:
            self.i += 1
            return Text(_unescape(tok.text[1:-1]))
        raise self.error("expected literal")

    def constraint(self):
        if self.at("("):
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return e
        if self.tok.kind == "NAME":
            return self.call()
        raise self.error("expected '(' or function call after FILTER")

    def modifiers(self, q: Query):
        if self.accept("GROUP"):
            self.expect("BY")
            while self.tok.kind == "VAR":
                q.group_by.append(self.var())
            if not q.group_by:
                raise self.error("GROUP BY needs at least one variable")
        if self.accept("HAVING"):
            q.having.append(self.constraint())
            while self.at("("):
                q.having.append(self.constraint())
        if self.accept("ORDER"):
            self.expect("BY")
            while True:
                if self.at("ASC", "DESC"):
                    desc = self.tok.text == "DESC"
                    self.i += 1
                    self.expect("(")
                    e = self.expr()
                    self.expect(")")
                    q.order_by.append(OrderKey(e, desc))
                elif self.tok.kind == "VAR":
                    q.order_by.append(OrderKey(self.var()))
                elif self.at("(") or (self.tok.kind == "NAME" and self.tok.text not in KEYWORDS):
                    q.order_by.append(OrderKey(self.constraint()))
                else:
                    break
            if not q.order_by:
                raise self.error("ORDER BY needs at least one key")
        for _ in range(2):
            if self.accept("LIMIT"):
                q.limit = int(self.expect_kind("NUMBER", "integer").text)
            elif self.accept("OFFSET"):
                q.offset = int(self.expect_kind("NUMBER", "integer").text)

    # -- expressions
    def expr(self):
        return self.or_expr()

    def or_expr(self):
        e = self.and_expr()
        while self.accept("||"):
            e = BinOp("||", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.rel_expr()
        while self.accept("&&"):
            e = BinOp("&&", e, self.rel_expr())
        return e

    def rel_expr(self):
        e = self.add_expr()
        tok = self.accept("=", "!=", "<", ">", "<=", ">=")
        if tok:
            e = BinOp(tok.text, e, self.add_expr())
        return e

    def add_expr(self):
        e = self.mul_expr()
        while True:
            tok = self.accept("+", "-")
            if not tok:
                return e
            e = BinOp(tok.text, e, self.mul_expr())

    def mul_expr(self):
        e = self.unary()
        while True:
            tok = self.accept("*", "/")
            if not tok:
                return e
            e = BinOp(tok.text, e, self.unary())

    def unary(self):
        tok = self.accept("!", "-", "+")
        if tok:
            return UnOp(tok.text, self.unary())
        return self.primary()

    def primary(self):
        tok = self.tok
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "VAR":
            return self.var()
        if tok.kind in ("NUMBER", "STRING") or self.at("TRUE", "FALSE"):
            return Const(self.literal())
        if tok.kind in ("IRIREF", "PNAME"):
            return Const(self.iri())
        if tok.kind == "NAME" and tok.text not in KEYWORDS:
            return self.call()
        found = tok.text or "end of query"
        raise self.error(f"expected expression, found {found!r}")

    def call(self):
        tok = self.expect_kind("NAME", "function name")
        name = tok.text.upper()
        if name in AGGREGATES:
            return self.aggregate(name)
        if name not in FUNCTIONS:
            raise self.error(f"unknown aggregate or function {tok.text!r}", tok)
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise self.error(f"{name} takes {lo}{'' if hi == lo else '+' if hi is None else f'-{hi}'} arguments", tok)
        if name == "BOUND" and not isinstance(args[0], Var):
            raise self.error("BOUND takes a variable", tok)
        return Call(name, tuple(args))

    def aggregate(self, name: str):
        self.expect("(")
        distinct = self.accept("DISTINCT") is not None
        if name == "COUNT" and self.accept("*"):
            arg = None
        else:
            arg = self.expr()
        sep = None
        if name == "GROUP_CONCAT" and self.accept(";"):
            self.expect("SEPARATOR")
            self.expect("=")
            sep = _unescape(self.expect_kind("STRING", "separator string").text[1:-1])
        self.expect(")")
        return Aggregate(name, arg, distinct, sep)


def scope(q: Query) -> list[str]:
    names: list[str] = []
    pats = list(q.patterns) + [tp for opt in q.optionals for tp in opt.patterns]
    for tp in pats:
        for v in pattern_vars(tp):
            if v not in names:
                names.append(v)
    for b in q.binds:
        if b.var.name not in names:
            names.append(b.var.name)
    return names


def _no_aggregates(expr, where: str):
    for e in walk(expr):
        if isinstance(e, Aggregate):
            raise QuerySyntaxError(f"aggregate {e.name} not allowed in {where}")


def check(q: Query):
    in_scope = set(scope(q))
    for f in q.filters:
        _no_aggregates(f.expr, "FILTER")
    pats = {v for tp in q.patterns for v in pattern_vars(tp)}
    pats |= {v for opt in q.optionals for tp in opt.patterns for v in pattern_vars(tp)}
    for b in q.binds:
        _no_aggregates(b.expr, "BIND")
        if b.var.name in pats:
            raise QuerySyntaxError(f"BIND target ?{b.var.name} is already in scope")
        pats.add(b.var.name)
    keys = {v.name for v in q.group_by}
    defined: set[str] = set()
    for p in q.projections:
        if isinstance(p.expr, Var):
            name = p.expr.name
            if name not in in_scope and name not in defined:
                raise QuerySyntaxError(f"?{name} unbound: projected but never bound in the query")
            if q.grouped and name not in keys and name not in defined:
                raise QuerySyntaxError(f"?{name} is projected but is not a GROUP BY key")
        elif q.grouped:
            loose = [
                v for v in variables(p.expr)
                if v not in keys and v not in defined and not _inside_aggregate(p.expr, v)
            ]
            if loose:
                raise QuerySyntaxError(f"?{loose[0]} used outside an aggregate in a grouped query")
        defined.add(p.alias)
    for v in q.group_by:
        if v.name not in in_scope:
            raise QuerySyntaxError(f"GROUP BY variable ?{v.name} is unbound")


def _inside_aggregate(expr, name: str) -> bool:
    """True if every occurrence of ``?name`` sits under an aggregate."""

    def visit(e, under):
        if isinstance(e, Var):
            return under or e.name != name
        if isinstance(e, Aggregate):
            return e.arg is None or visit(e.arg, True)
        if isinstance(e, BinOp):
            return visit(e.left, under) and visit(e.right, under)
        if isinstance(e, UnOp):
            return visit(e.operand, under)
        if isinstance(e, Call):
            return all(visit(a, under) for a in e.args)
        return True

    return visit(expr, False)


def parse_query(text: str) -> Query:
    return Parser(text).parse()
