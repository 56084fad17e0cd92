"""SPARQL-subset parser and evaluator over comparison graphs."""
from .ast import Query
from .evaluate import evaluate, evaluate_join, solutions
from .explain import explain
from .graph import Graph, build_graph
from .parser import QuerySyntaxError, parse_query

__all__ = [
    "Graph",
    "Query",
    "QuerySyntaxError",
    "build_graph",
    "evaluate",
    "evaluate_join",
    "explain",
    "parse_query",
    "solutions",
]
