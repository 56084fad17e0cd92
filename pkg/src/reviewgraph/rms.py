"""Table similarity: RNSS and the mapping-based RMS precision/recall/F1."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence, Union

from .kernels import hungarian, nl_distance, nl_matrix
from .tableio import ResultTable, _STRICT_RE, format_value

SEP = "\x1f"
EPS = 1e-9
NORMAL = "normal"
TRANSPOSED = "transposed"

Scalar = Union[Decimal, str]


@dataclass(frozen=True)
class Thresholds:
    tau: float = 0.5
    theta: float = 0.5

    def __post_init__(self):
        for name in ("tau", "theta"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {val}")


@dataclass(frozen=True)
class MappingEntry:
    row_key: str
    col_key: str
    value: Scalar

    @property
    def key(self) -> str:
        return self.row_key + SEP + self.col_key


@dataclass
class MappingSet:
    entries: list[MappingEntry] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class Assignment:
    pairs: tuple[tuple[int, int], ...]
    total_cost: float
    n_rows: int
    n_cols: int

    @property
    def matrix(self) -> list[list[int]]:
        x = [[0] * self.n_cols for _ in range(self.n_rows)]
        for i, j in self.pairs:
            x[i][j] = 1
        return x


@dataclass(frozen=True)
class RmsScores:
    precision: float
    recall: float
    f1: float
    empty_prediction: bool = False
    orientation: str = NORMAL

    def percent(self) -> tuple[float, float, float]:
        return (100 * self.precision, 100 * self.recall, 100 * self.f1)


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def relative_distance(p, t) -> float:
    p, t = _dec(p), _dec(t)
    if t == 0:
        return 0.0 if p == 0 else 1.0
    return min(1.0, float(abs(p - t) / abs(t)))


def _square(cost: list[list[float]], n_rows: int, n_cols: int, pad: float) -> list[list[float]]:
    n = max(n_rows, n_cols)
    return [[cost[i][j] if i < n_rows and j < n_cols else pad for j in range(n)] for i in range(n)]


def rnss(P: Sequence, T: Sequence) -> float:
    """1 minus the optimal paired relative error, normalised by max(N, M).

    Unpaired numbers on the longer side each cost 1.
    """
    n, m = len(P), len(T)
    if n == 0 and m == 0:
        return 1.0
    cost = [[relative_distance(p, t) for t in T] for p in P]
    assign, _, _ = hungarian(_square(cost, n, m, 1.0))
    total = math.fsum(cost[i][j] if i < n and j < m else 1.0 for i, j in enumerate(assign))
    return max(0.0, 1.0 - total / max(n, m))


# -- mappings -------------------------------------------------------------------


def cell_value(v) -> Scalar:
    if v is None:
        return ""
    if isinstance(v, Decimal):
        return v
    text = str(v).strip()
    if _STRICT_RE.fullmatch(text):
        return Decimal(text)
    return text


def table_to_mappings(
    t: ResultTable, orientation: str = NORMAL, key_columns: Iterable[str] | None = None
) -> MappingSet:
    """Decompose a table into (row key, column key, value) entries.

    The first column supplies row keys unless ``key_columns`` is given and the
    first header is not in it. Single-column tables and tables without a key
    column get an empty row key, so their rows match on values alone and row
    order never matters.
    """
    if orientation not in (NORMAL, TRANSPOSED):
        raise ValueError(f"unknown orientation {orientation!r}")
    headers = [c.strip() for c in t.columns]
    keyed = len(headers) > 1 and (key_columns is None or headers[0] in set(key_columns))
    start = 1 if keyed else 0
    entries = []
    for row in t.rows:
        rkey = format_value(row[0]).strip() if keyed else ""
        for c in range(start, len(headers)):
            a, b = rkey, headers[c]
            if orientation == TRANSPOSED:
                a, b = b, a
            entries.append(MappingEntry(a, b, cell_value(row[c])))
    return MappingSet(entries)


def key_similarity(a: MappingEntry, b: MappingEntry, tau: float = 0.5) -> float:
    return 1.0 - nl_distance(a.key, b.key, tau)


def value_similarity(p: Scalar, t: Scalar, theta: float = 0.5, tau: float = 0.5) -> float:
    """Similarity of a predicted value to a target value."""
    if isinstance(p, Decimal) and isinstance(t, Decimal):
        return 1.0 - min(1.0, relative_distance(p, t) / theta)
    return 1.0 - nl_distance(format_value(p), format_value(t), tau)


# -- matching -------------------------------------------------------------------


def _tight(cost, u, v) -> list[list[bool]]:
    return [[abs(u[i] + v[j] - cost[i][j]) <= EPS for j in range(len(cost))] for i in range(len(cost))]


def _lexmin_matching(allowed: list[list[bool]], start: list[int]) -> list[int]:
    """Lexicographically smallest perfect matching inside ``allowed``.

    ``start`` is any perfect matching using allowed cells. Row by row, the
    smallest column reachable through an alternating cycle over rows that are
    not yet fixed is swapped in.
    """
    n = len(allowed)
    match = list(start)
    owner = [0] * n
    for i, j in enumerate(match):
        owner[j] = i
    for i in range(n):
        for j in range(match[i]):
            if not allowed[i][j]:
                continue
            # find an alternating path from owner[j] to column match[i]
            target = match[i]
            src = owner[j]
            if src < i:
                continue
            prev = {src: None}
            queue = deque([src])
            found = None
            while queue and found is None:
                r = queue.popleft()
                for c in range(n):
                    if not allowed[r][c] or c == match[r]:
                        continue
                    if c == target:
                        found = (r, c)
                        break
                    nr = owner[c]
                    if nr > i and nr not in prev:
                        prev[nr] = (r, c)
                        queue.append(nr)
            if found is None:
                continue
            # rotate: each row on the path takes the column that led past it
            r, c = found
            while True:
                match[r] = c
                owner[c] = r
                step = prev[r]
                if step is None:
                    break
                r, c = step
            match[i] = j
            owner[j] = i
            break
    return match


def match_entries(
    P: MappingSet, T: MappingSet, tau: float = 0.5, *, value_scores: list[list[float]] | None = None
) -> Assignment:
    """Minimum key-cost assignment between predicted and target entries.

    Among all key-optimal assignments, the one with the largest summed
    ``value_scores`` (if given) is kept, and remaining ties go to the
    lexicographically smallest (i, j) pairing.
    """
    n, m = len(P), len(T)
    if n == 0 or m == 0:
        return Assignment((), 0.0, n, m)
    key_cost = nl_matrix([e.key for e in P], [e.key for e in T], tau)
    size = max(n, m)
    c1 = _square(key_cost, n, m, 0.0)
    assign, u, v = hungarian(c1)
    allowed = _tight(c1, u, v)
    if value_scores is not None:
        big = float(size + 1)
        c2 = [
            [
                (1.0 - value_scores[i][j] if i < n and j < m else 0.0) if allowed[i][j] else big
                for j in range(size)
            ]
            for i in range(size)
        ]
        assign, u2, v2 = hungarian(c2)
        tight2 = _tight(c2, u2, v2)
        allowed = [[allowed[i][j] and tight2[i][j] for j in range(size)] for i in range(size)]
    assign = _lexmin_matching(allowed, assign)
    pairs = tuple((i, j) for i, j in enumerate(assign) if i < n and j < m)
    total = math.fsum(key_cost[i][j] for i, j in pairs)
    return Assignment(pairs, total, n, m)


def _score_sets(P: MappingSet, T: MappingSet, th: Thresholds) -> tuple[float, float]:
    n, m = len(P), len(T)
    key_sim = [[1.0 - d for d in row] for row in nl_matrix([e.key for e in P], [e.key for e in T], th.tau)]
    s = [
        [key_sim[i][j] * value_similarity(P.entries[i].value, T.entries[j].value, th.theta, th.tau) for j in range(m)]
        for i in range(n)
    ]
    a = match_entries(P, T, th.tau, value_scores=s)
    total = math.fsum(s[i][j] for i, j in a.pairs)
    return total / n, total / m


def rms_scores(
    pred: ResultTable,
    gold: ResultTable,
    thresholds: Thresholds = Thresholds(),
    key_columns: Iterable[str] | None = None,
    orientations: Sequence[str] = (NORMAL, TRANSPOSED),
) -> RmsScores:
    if key_columns is not None:
        key_columns = list(key_columns)
    T = table_to_mappings(gold, NORMAL, key_columns)
    if len(T) == 0:
        raise ValueError("gold table is empty")
    best = None
    for orientation in orientations:
        P = table_to_mappings(pred, orientation, key_columns)
        if len(P) == 0:
            return RmsScores(0.0, 0.0, 0.0, empty_prediction=True, orientation=orientation)
        p, r = _score_sets(P, T, thresholds)
        p, r = min(1.0, max(0.0, p)), min(1.0, max(0.0, r))
        cand = RmsScores(p, r, _f1(p, r), orientation=orientation)
        if best is None or cand.f1 > best.f1:
            best = cand
    return best


def macro_average(per_query: Sequence[RmsScores]) -> RmsScores:
    if not per_query:
        raise ValueError("macro average of an empty list")
    k = len(per_query)
    return RmsScores(
        math.fsum(s.precision for s in per_query) / k,
        math.fsum(s.recall for s in per_query) / k,
        math.fsum(s.f1 for s in per_query) / k,
    )
