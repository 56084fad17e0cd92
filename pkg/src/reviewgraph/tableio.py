"""CSV serialization of comparisons and parsing of answer tables."""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional, Union

from .model import (
    NUMERIC,
    QUALIFIERS,
    RESOURCE,
    TEXT,
    Absent,
    Comparison,
    Number,
    PropertyDef,
    Range,
    Resource,
    SchemaError,
    Text,
    add_contribution,
    create_comparison,
)

Value = Optional[Union[str, Decimal]]

ID_HEADER = "contribution-id"
PAPER_HEADER = "paper-id"

NUM = r"-?(?:\d+(?:\.\d*)?|\.\d+)"
_NUMBER_RE = re.compile(rf"([~<>]?)({NUM})")
_RANGE_RE = re.compile(rf"({NUM})--({NUM})")
_STRICT_RE = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?")
_HEADER_RE = re.compile(r"(?P<label>.*?)(?: \[(?P<unit>[^\]]*)\])? \{(?P<id>[^:{}]+):(?P<kind>\w+)\}")
_RESOURCE_RE = re.compile(r"(?P<label>.*) <(?P<id>[^<>]+)>")
_PREFIX_OF = {v: k for k, v in QUALIFIERS.items() if v}

ABSENT_MARKERS = frozenset({"", "-", "--", "–", "—", "——"})


class TableFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CsvProfile:
    delimiter: str = ","
    quote: str = '"'
    absent_marker: str = ""
    decimal_style: str = "fixed"

    def __post_init__(self):
        if self.delimiter == self.quote:
            raise ValueError("delimiter and quote must differ")
        if self.decimal_style != "fixed":
            raise ValueError("only fixed decimal notation is supported")


DEFAULT_PROFILE = CsvProfile()


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[Value]] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise TableFormatError(f"duplicate column names in {self.columns}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise TableFormatError(f"row {i} has {len(row)} values, expected {len(self.columns)}")

    def __len__(self):
        return len(self.rows)


def format_value(v: Value, absent: str = "") -> str:
    if v is None:
        return absent
    if isinstance(v, Decimal):
        return format(v, "f")
    return str(v)


def _writer(buf, profile):
    return csv.writer(
        buf,
        delimiter=profile.delimiter,
        quotechar=profile.quote,
        lineterminator="\n",
        quoting=csv.QUOTE_MINIMAL,
    )


def _reader(text, profile):
    return csv.reader(io.StringIO(text), delimiter=profile.delimiter, quotechar=profile.quote)


# -- comparisons -----------------------------------------------------------


def _header_cell(p: PropertyDef) -> str:
    unit = f" [{p.unit}]" if p.unit else ""
    return f"{p.label}{unit} {{{p.id}:{p.kind}}}"


def _cell_text(cell, profile) -> str:
    if cell is Absent:
        return profile.absent_marker
    if isinstance(cell, Resource):
        return f"{cell.label} <{cell.id}>"
    return str(cell)


def export_comparison_csv(c: Comparison, profile: CsvProfile = DEFAULT_PROFILE) -> bytes:
    buf = io.StringIO()
    w = _writer(buf, profile)
    w.writerow([ID_HEADER, PAPER_HEADER] + [_header_cell(p) for p in c.properties])
    for contrib in c.contributions:
        row = [contrib.id, contrib.paper_id]
        row += [_cell_text(contrib.cells.get(p.id, Absent), profile) for p in c.properties]
        w.writerow(row)
    return buf.getvalue().encode("utf-8")


def parse_numeric_cell(text: str, unit: str | None = None):
    """Parse a numeric-column cell: number, qualified number, range or text token.

    Tokens without digits (``RT``) become Text; anything else with a digit
    that is not a number or range is rejected.
    """
    m = _RANGE_RE.fullmatch(text)
    if m:
        return Range(Decimal(m.group(1)), Decimal(m.group(2)), unit)
    m = _NUMBER_RE.fullmatch(text)
    if m:
        return Number(Decimal(m.group(2)), unit, _PREFIX_OF.get(m.group(1), "none"))
    if any(ch.isdigit() for ch in text):
        raise TableFormatError(f"unparseable number {text!r}")
    return Text(text)


def _parse_cell(prop: PropertyDef, text: str, profile: CsvProfile):
    if text == profile.absent_marker:
        return Absent
    if prop.kind == NUMERIC:
        return parse_numeric_cell(text, prop.unit)
    if prop.kind == RESOURCE:
        m = _RESOURCE_RE.fullmatch(text)
        if not m:
            raise TableFormatError(f"resource cell {text!r} lacks an <id>")
        return Resource(m.group("id"), m.group("label"))
    return Text(text)


def _parse_header(cell: str) -> PropertyDef:
    m = _HEADER_RE.fullmatch(cell)
    if not m:
        raise TableFormatError(f"malformed property header {cell!r}")
    kind = m.group("kind")
    unit = m.group("unit")
    if kind == NUMERIC and unit is None:
        unit = ""
    return PropertyDef(m.group("id"), m.group("label"), kind, unit)


def import_comparison_csv(
    data: bytes, profile: CsvProfile = DEFAULT_PROFILE, id: str = "", title: str = ""
) -> Comparison:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    rows = list(_reader(text, profile))
    if not rows:
        raise TableFormatError("empty file")
    header = rows[0]
    if len(set(header)) != len(header):
        raise TableFormatError("duplicate headers")
    if header[:2] != [ID_HEADER, PAPER_HEADER]:
        raise TableFormatError(f"header must start with {ID_HEADER},{PAPER_HEADER}")
    props = [_parse_header(h) for h in header[2:]]
    try:
        c = create_comparison(title or id, props, id=id)
    except SchemaError as exc:
        raise TableFormatError(str(exc)) from None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise TableFormatError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            cells = {p.id: _parse_cell(p, t, profile) for p, t in zip(props, row[2:])}
            add_contribution(c, row[1], cells, id=row[0])
        except (TableFormatError, SchemaError) as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from None
    return c


def load_store(directory) -> list[Comparison]:
    """Load every ``<id>.csv`` in a directory; titles come from index.json if present."""
    directory = Path(directory)
    titles = {}
    index = directory / "index.json"
    if index.exists():
        titles = json.loads(index.read_text(encoding="utf-8"))
    store = []
    for path in sorted(directory.glob("*.csv")):
        cid = path.stem
        store.append(import_comparison_csv(path.read_bytes(), id=cid, title=titles.get(cid, cid)))
    return store


# -- result tables ----------------------------------------------------------


def typed_value(text: str) -> Value:
    text = text.strip()
    if text in ABSENT_MARKERS:
        return None
    if _STRICT_RE.fullmatch(text):
        return Decimal(text)
    return text


def _split_pipe(line: str) -> list[str]:
    line = line.strip()
    if line.startswith("|"):
        line = line[1:]
    if line.endswith("|"):
        line = line[:-1]
    return [c.strip() for c in line.split("|")]


_SEPARATOR_RE = re.compile(r"\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?")


def _pipe_table(lines: list[str]):
    block = []
    for line in lines:
        if "|" in line:
            block.append(line)
        elif block:
            break
    if len(block) < 2:
        return None
    cells = [_split_pipe(ln) for ln in block if not _SEPARATOR_RE.fullmatch(ln.strip())]
    return cells


def _csv_table(lines: list[str]):
    block = []
    for line in lines:
        if "," in line:
            block.append(line)
        elif block:
            break
    if len(block) < 2:
        return None
    return [[c.strip() for c in r] for r in csv.reader(block)]


def _strip_fences(text: str) -> list[str]:
    lines = text.strip().splitlines()
    return [ln for ln in lines if not ln.strip().startswith("```")]


def parse_result_table(text: str) -> ResultTable:
    """Parse a CSV or pipe/markdown table; refuse anything else."""
    lines = _strip_fences(text)
    first_error = None
    # a CSV cell may itself start with "|", so a failed pipe parse falls back to CSV
    readers = (_pipe_table, _csv_table) if any(ln.strip().startswith("|") for ln in lines) else (_csv_table,)
    for read in readers:
        try:
            return _build(read(lines))
        except TableFormatError as exc:
            first_error = first_error or exc
    raise first_error


def _build(cells) -> ResultTable:
    if not cells:
        raise TableFormatError("no table found")
    header, body = cells[0], cells[1:]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise TableFormatError(f"ragged row {i}: {len(row)} fields, expected {len(header)}")
    return ResultTable(header, [[typed_value(c) for c in row] for row in body])


def result_to_csv(t: ResultTable, profile: CsvProfile = DEFAULT_PROFILE) -> bytes:
    buf = io.StringIO()
    w = _writer(buf, profile)
    w.writerow(t.columns)
    for row in t.rows:
        w.writerow([format_value(v, profile.absent_marker) for v in row])
    return buf.getvalue().encode("utf-8")


def result_to_markdown(t: ResultTable) -> str:
    out = ["| " + " | ".join(t.columns) + " |", "|" + "|".join("---" for _ in t.columns) + "|"]
    for row in t.rows:
        out.append("| " + " | ".join(format_value(v) for v in row) + " |")
    return "\n".join(out) + "\n"


def canonicalize(t: ResultTable) -> ResultTable:
    def clean(v):
        if isinstance(v, str):
            v = v.strip()
            return None if v in ABSENT_MARKERS else v
        return v

    rows = [[clean(v) for v in row] for row in t.rows]
    rows.sort(key=lambda r: tuple(format_value(v) for v in r))
    return ResultTable([c.strip() for c in t.columns], rows)


def transpose(t: ResultTable) -> ResultTable:
    """Swap rows and columns; the first column supplies the new headers."""
    if not t.columns:
        return ResultTable([], [])
    corner = t.columns[0]
    columns = [corner] + [format_value(row[0]) for row in t.rows]
    rows = [[name] + [row[k] for row in t.rows] for k, name in enumerate(t.columns) if k > 0]
    return ResultTable(columns, rows)
