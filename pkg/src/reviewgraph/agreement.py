"""Inter-annotator agreement for ordinal rating matrices.

All statistics are computed in exact rational arithmetic and converted to
float at the end, so perfect agreement yields exactly 1.0.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Optional, Sequence

DEFAULT_SCALE = (1, 2, 3, 4, 5)


class UndefinedStatistic(ValueError):
    pass


@dataclass(frozen=True)
class AgreementResult:
    value: Optional[float]
    defined: bool = True
    reason: str = ""

    def __float__(self):
        if not self.defined:
            raise UndefinedStatistic(self.reason)
        return self.value

    @classmethod
    def undefined(cls, reason: str) -> "AgreementResult":
        return cls(None, False, reason)


@dataclass
class RatingMatrix:
    """``ratings[item][rater]``; ``None`` marks a missing rating."""

    ratings: list[list[Optional[Hashable]]]
    scale: tuple = DEFAULT_SCALE
    item_ids: list = field(default_factory=list)
    rater_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.scale = tuple(self.scale)
        if not self.ratings:
            raise ValueError("a rating matrix needs at least one item")
        widths = {len(r) for r in self.ratings}
        if len(widths) != 1:
            raise ValueError("every item needs one slot per rater")
        if widths.pop() < 2:
            raise ValueError("a rating matrix needs at least two raters")
        allowed = set(self.scale)
        for i, row in enumerate(self.ratings):
            for r in row:
                if r is not None and r not in allowed:
                    raise ValueError(f"item {i}: rating {r!r} is not on the scale {self.scale}")
        if not self.item_ids:
            self.item_ids = list(range(len(self.ratings)))
        if not self.rater_ids:
            self.rater_ids = list(range(len(self.ratings[0])))

    @property
    def items(self) -> int:
        return len(self.ratings)

    @property
    def raters(self) -> int:
        return len(self.ratings[0])

    @property
    def complete(self) -> bool:
        return all(r is not None for row in self.ratings for r in row)

    def column(self, rater) -> list:
        k = self.rater_ids.index(rater)
        return [row[k] for row in self.ratings]


def fleiss_kappa(m: RatingMatrix) -> AgreementResult:
    if not m.complete:
        raise ValueError("Fleiss' kappa requires complete ratings")
    n, N = m.raters, m.items
    counts = [Counter(row) for row in m.ratings]
    totals = Counter()
    for c in counts:
        totals.update(c)
    p_bar = sum(
        Fraction(sum(v * v for v in c.values()) - n, n * (n - 1)) for c in counts
    ) / N
    pe = sum(Fraction(t, N * n) ** 2 for t in totals.values())
    if pe == 1:
        return AgreementResult.undefined("expected agreement is 1: every rating falls in one category")
    return AgreementResult(float((p_bar - pe) / (1 - pe)))


def coincidences(m: RatingMatrix) -> dict[tuple, Fraction]:
    """Krippendorff coincidence matrix over pairable (multiply rated) items."""
    o: dict[tuple, Fraction] = {}
    for row in m.ratings:
        vals = [r for r in row if r is not None]
        mu = len(vals)
        if mu < 2:
            continue
        freq = Counter(vals)
        for c, nc in freq.items():
            for k, nk in freq.items():
                pairs = nc * (nk - 1) if c == k else nc * nk
                if pairs:
                    o[(c, k)] = o.get((c, k), 0) + Fraction(pairs, mu - 1)
    return o


def ordinal_delta2(scale: Sequence, marginals: dict) -> dict[tuple, Fraction]:
    idx = {c: i for i, c in enumerate(scale)}
    n = [Fraction(marginals.get(c, 0)) for c in scale]
    out = {}
    for c in scale:
        for k in scale:
            a, b = sorted((idx[c], idx[k]))
            s = sum(n[a : b + 1]) - (n[a] + n[b]) / 2
            out[(c, k)] = s * s
    return out


def krippendorff_alpha_ordinal(m: RatingMatrix) -> AgreementResult:
    o = coincidences(m)
    if not o:
        raise ValueError("no item carries two or more ratings")
    marg: dict = {}
    for (c, _), v in o.items():
        marg[c] = marg.get(c, 0) + v
    n = sum(marg.values())
    d2 = ordinal_delta2(m.scale, marg)
    observed = sum(v * d2[ck] for ck, v in o.items())
    expected = sum(marg[c] * marg[k] * d2[(c, k)] for c in marg for k in marg)
    if expected == 0:
        return AgreementResult.undefined("no expected disagreement: a single category is used")
    return AgreementResult(float(1 - (n - 1) * observed / expected))


def _paired(a: Sequence, b: Sequence) -> list[tuple]:
    if len(a) != len(b):
        raise ValueError(f"rating lists differ in length: {len(a)} vs {len(b)}")
    pairs = [(x, y) for x, y in zip(a, b) if x is not None and y is not None]
    if not pairs:
        raise ValueError("no item rated by both annotators")
    return pairs


def cohen_kappa(a: Sequence, b: Sequence) -> AgreementResult:
    pairs = _paired(a, b)
    n = len(pairs)
    po = Fraction(sum(x == y for x, y in pairs), n)
    ca = Counter(x for x, _ in pairs)
    cb = Counter(y for _, y in pairs)
    pe = sum(Fraction(ca[c] * cb[c], n * n) for c in ca)
    if pe == 1:
        return AgreementResult.undefined("expected agreement is 1: both annotators use one category")
    return AgreementResult(float((po - pe) / (1 - pe)))


def exact_match_rate(a: Sequence, b: Sequence) -> float:
    pairs = _paired(a, b)
    return float(Fraction(sum(x == y for x, y in pairs), len(pairs)))


def _coerce(text: str, scale: Iterable):
    for s in scale:
        if str(s) == text:
            return s
    raise ValueError(f"rating {text!r} is not on the scale")


def read_long_csv(
    data,
    item_col: str = "item",
    rater_col: str = "rater",
    rating_col: str = "rating",
    scale: Sequence = DEFAULT_SCALE,
    filters: dict | None = None,
) -> RatingMatrix:
    """Build a matrix from long-format rows (one rating per line).

    ``filters`` keeps only rows whose named columns equal the given values,
    which selects one question out of a multi-question survey export.
    """
    text = data.decode("utf-8-sig") if isinstance(data, (bytes, bytearray)) else data
    reader = csv.DictReader(io.StringIO(text))
    missing = {item_col, rater_col, rating_col} - set(reader.fieldnames or [])
    if missing:
        raise ValueError(f"missing columns: {sorted(missing)}")
    items: list = []
    raters: list = []
    cells: dict = {}
    for line, row in enumerate(reader, start=2):
        if filters and any(row.get(k) != v for k, v in filters.items()):
            continue
        item, rater, raw = row[item_col], row[rater_col], row[rating_col].strip()
        if item not in items:
            items.append(item)
        if rater not in raters:
            raters.append(rater)
        if (item, rater) in cells:
            raise ValueError(f"line {line}: second rating for item {item!r} by {rater!r}")
        cells[(item, rater)] = None if raw == "" else _coerce(raw, scale)
    ratings = [[cells.get((i, r)) for r in raters] for i in items]
    return RatingMatrix(ratings, tuple(scale), items, raters)
