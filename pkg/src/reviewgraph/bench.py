"""Benchmark harness: gold self-check, per-system scoring and report output."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import Comparison
from .query import build_graph, evaluate, parse_query
from .query.graph import Graph
from .rag import (
    GoldEchoLLM,
    HashEmbedder,
    RagConfig,
    answer_full_context,
    answer_rag,
    answer_symbolic_context,
    build_index,
    segment_text,
)
from .rag.pipeline import QaResponse
from .rms import RmsScores, Thresholds, macro_average, rms_scores
from .tableio import (
    ResultTable,
    TableFormatError,
    canonicalize,
    export_comparison_csv,
    load_store,
    parse_result_table,
    result_to_csv,
)

SPARQL = "sparql"
FULL_CONTEXT = "full_context"
RAG = "rag"
SYMBOLIC = "symbolic_context"
REPLAY = "replay"
# report rows follow this protocol order, then model id
SETTINGS = (SPARQL, FULL_CONTEXT, RAG, SYMBOLIC, REPLAY)

REPORT_COLUMNS = ("setting", "model", "#queries", "RMS-prec", "RMS-rec", "RMS-F1")


class FixtureMismatch(AssertionError):
    """A shipped query does not reproduce its gold table."""


@dataclass(frozen=True)
class QueryCase:
    id: str
    comparisons: tuple[str, ...]
    query_file: Path
    detailed_nl_query: str
    gold_table: Path
    doc_ids: tuple[str, ...]
    docs_dir: Path | None = None

    def gold(self) -> ResultTable:
        t = parse_result_table(self.gold_table.read_text(encoding="utf-8"))
        if not t.rows:
            raise TableFormatError(f"{self.id}: gold table is empty")
        return t

    def query_text(self) -> str:
        return self.query_file.read_text(encoding="utf-8")

    def document(self) -> str:
        if self.docs_dir is None:
            raise ValueError(f"{self.id}: no document directory configured")
        return "\n\n".join((self.docs_dir / f"{d}.txt").read_text(encoding="utf-8") for d in self.doc_ids)


@dataclass(frozen=True)
class Corpus:
    root: Path
    store_dir: Path
    docs_dir: Path
    cases: tuple[QueryCase, ...]

    def store(self) -> dict[str, Comparison]:
        return {c.id: c for c in load_store(self.store_dir)}


def load_manifest(path) -> Corpus:
    path = Path(path)
    spec = json.loads(path.read_text(encoding="utf-8"))
    root = path.parent
    docs_dir = root / spec.get("docs", "docs")
    cases = []
    seen = set()
    for entry in spec["cases"]:
        if entry["id"] in seen:
            raise ValueError(f"duplicate case id {entry['id']!r}")
        seen.add(entry["id"])
        case = QueryCase(
            id=entry["id"],
            comparisons=tuple(entry["comparisons"]),
            query_file=root / entry["query_file"],
            detailed_nl_query=entry["detailed_nl_query"],
            gold_table=root / entry["gold_table"],
            doc_ids=tuple(entry.get("doc_ids", ())),
            docs_dir=docs_dir,
        )
        case.gold()
        cases.append(case)
    return Corpus(root, root / spec.get("store", "comparisons"), docs_dir, tuple(cases))


def default_manifest() -> Path:
    return Path(__file__).parent / "data" / "manifest.json"


def relabel(t: ResultTable, columns: Sequence[str]) -> ResultTable:
    if len(columns) != len(t.columns):
        raise FixtureMismatch(f"result has {len(t.columns)} columns, gold has {len(columns)}")
    return ResultTable(list(columns), t.rows)


def _as_store(store) -> dict[str, Comparison]:
    if isinstance(store, Mapping):
        return dict(store)
    return {c.id: c for c in store}


class _Graphs:
    def __init__(self, store: Mapping[str, Comparison]):
        self.store = store
        self._cache: dict[tuple, Graph] = {}

    def __call__(self, ids: Iterable[str]) -> Graph:
        key = tuple(sorted(ids))
        if key not in self._cache:
            missing = [i for i in key if i not in self.store]
            if missing:
                raise KeyError(f"comparisons not in store: {missing}")
            self._cache[key] = build_graph([self.store[i] for i in key])
        return self._cache[key]


def _sparql_answer(case: QueryCase, graphs: _Graphs, gold: ResultTable) -> ResultTable:
    result = evaluate(parse_query(case.query_text()), graphs(case.comparisons))
    return relabel(result, gold.columns)


def run_setting1(cases: Sequence[QueryCase], store) -> dict[str, ResultTable]:
    """Evaluate every case's query and check it against the printed gold table."""
    graphs = _Graphs(_as_store(store))
    out = {}
    for case in cases:
        gold = case.gold()
        result = _sparql_answer(case, graphs, gold)
        got = result_to_csv(canonicalize(result))
        want = result_to_csv(canonicalize(gold))
        if got != want:
            raise FixtureMismatch(
                f"{case.id}: query result differs from gold\n--- gold\n{want.decode()}--- result\n{got.decode()}"
            )
        out[case.id] = result
    return out


@dataclass(frozen=True)
class SystemConfig:
    setting: str
    provider: str | None = None
    rag: RagConfig | None = None
    thresholds: Thresholds = Thresholds()
    embedder: str | None = None

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.setting == SPARQL and self.provider is not None:
            raise ValueError("the sparql setting takes no provider")
        if self.setting != SPARQL and not self.provider:
            raise ValueError(f"the {self.setting} setting needs a provider")

    @property
    def model(self) -> str:
        return self.provider or SPARQL


@dataclass
class QueryOutcome:
    scores: RmsScores
    valid: bool
    error: str | None = None
    response: QaResponse | None = None


@dataclass
class BenchReport:
    setting: str
    model: str
    per_query: dict[str, QueryOutcome] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.per_query)

    @property
    def n_valid(self) -> int:
        return sum(o.valid for o in self.per_query.values())

    @property
    def macro(self) -> RmsScores | None:
        valid = [o.scores for o in self.per_query.values() if o.valid]
        return macro_average(valid) if valid else None


_ZERO = RmsScores(0.0, 0.0, 0.0)


def score_response(resp: QaResponse, gold: ResultTable, th: Thresholds) -> QueryOutcome:
    if not resp.valid:
        return QueryOutcome(_ZERO, False, resp.error, resp)
    return QueryOutcome(rms_scores(resp.table, gold, th), True, None, resp)


def run_system(
    cases: Sequence[QueryCase],
    sys: SystemConfig,
    providers: Mapping[str, object] | None = None,
    store=None,
    max_workers: int = 4,
) -> BenchReport:
    """Answer every case with one system and score it against gold.

    A failing query is recorded as invalid; it never aborts the run.
    """
    providers = providers or {}
    report = BenchReport(sys.setting, sys.model)
    store = _as_store(store) if store is not None else {}
    th = sys.thresholds

    if sys.setting == SPARQL:
        graphs = _Graphs(store)
        for case in cases:
            gold = case.gold()
            try:
                pred = _sparql_answer(case, graphs, gold)
            except Exception as exc:  # noqa: BLE001
                report.per_query[case.id] = QueryOutcome(_ZERO, False, f"{type(exc).__name__}: {exc}")
                continue
            report.per_query[case.id] = QueryOutcome(rms_scores(pred, gold, th), True)
        return report

    if sys.setting == REPLAY:
        raise ValueError("use replay_system for stored outputs")

    llm = providers[sys.provider]
    cfg = sys.rag or RagConfig()
    indexes = {}
    if sys.setting == RAG:
        embedder = providers[sys.embedder] if sys.embedder else HashEmbedder()
        for case in cases:
            if case.doc_ids not in indexes:
                try:
                    indexes[case.doc_ids] = build_index(segment_text(case.document(), cfg), embedder)
                except Exception as exc:  # noqa: BLE001
                    indexes[case.doc_ids] = exc

    def one(case: QueryCase) -> QueryOutcome:
        gold = case.gold()
        try:
            if sys.setting == FULL_CONTEXT:
                resp = answer_full_context(case.document(), case.detailed_nl_query, llm)
            elif sys.setting == RAG:
                index = indexes[case.doc_ids]
                if isinstance(index, Exception):
                    return QueryOutcome(_ZERO, False, f"index error: {index}")
                resp = answer_rag(index, case.detailed_nl_query, cfg, None, llm)
            else:
                blobs = [export_comparison_csv(store[c]) for c in case.comparisons]
                resp = answer_symbolic_context(blobs, case.detailed_nl_query, llm)
        except Exception as exc:  # noqa: BLE001
            return QueryOutcome(_ZERO, False, f"{type(exc).__name__}: {exc}")
        return score_response(resp, gold, th)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        outcomes = list(pool.map(one, cases))
    for case, outcome in zip(cases, outcomes):
        report.per_query[case.id] = outcome
    return report


def replay_system(cases: Sequence[QueryCase], outputs_dir, model: str, thresholds: Thresholds = Thresholds()) -> BenchReport:
    """Score stored raw model outputs, one ``<case id>.txt`` file per query.

    Missing files count as invalid predictions, like unparseable ones.
    """
    outputs_dir = Path(outputs_dir)
    report = BenchReport(REPLAY, model)
    for case in cases:
        path = outputs_dir / f"{case.id}.txt"
        if not path.exists():
            report.per_query[case.id] = QueryOutcome(_ZERO, False, "no stored output")
            continue
        raw = path.read_text(encoding="utf-8")
        try:
            table = parse_result_table(raw)
        except TableFormatError as exc:
            resp = QaResponse(raw, None, f"parse failure: {exc}", 0.0, model)
        else:
            resp = QaResponse(raw, table, None, 0.0, model)
        report.per_query[case.id] = score_response(resp, case.gold(), thresholds)
    return report


def gold_echo_provider(cases: Sequence[QueryCase], setting: str) -> GoldEchoLLM:
    answers = {c.detailed_nl_query: c.gold_table.read_text(encoding="utf-8") for c in cases}
    return GoldEchoLLM(answers, require_context=setting in (FULL_CONTEXT, RAG))


# -- reports --------------------------------------------------------------------


def _pct(x: float) -> str:
    return f"{100 * x:.1f}"


def _rows(reports: Iterable[BenchReport]) -> list[list[str]]:
    ordered = sorted(reports, key=lambda r: (SETTINGS.index(r.setting), r.model))
    rows = []
    for r in ordered:
        m = r.macro
        scores = [_pct(m.precision), _pct(m.recall), _pct(m.f1)] if m else ["n/a"] * 3
        rows.append([r.setting, r.model, str(r.n_valid)] + scores)
    return rows


def emit_report(reports: Iterable[BenchReport], format: str = "csv") -> bytes:
    rows = _rows(reports)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)
        return buf.getvalue().encode("utf-8")
    if format == "text":
        table = [list(REPORT_COLUMNS)] + rows
        widths = [max(len(r[k]) for r in table) for k in range(len(REPORT_COLUMNS))]
        lines = []
        for r in table:
            cells = [c.ljust(w) if k < 2 else c.rjust(w) for k, (c, w) in enumerate(zip(r, widths))]
            lines.append("  ".join(cells).rstrip())
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")


def per_query_json(report: BenchReport) -> bytes:
    body = {
        "setting": report.setting,
        "model": report.model,
        "n_valid": report.n_valid,
        "total": report.total,
        "queries": {
            qid: {
                "valid": o.valid,
                "error": o.error,
                "precision": o.scores.precision,
                "recall": o.scores.recall,
                "f1": o.scores.f1,
                "orientation": o.scores.orientation,
            }
            for qid, o in sorted(report.per_query.items())
        },
    }
    return (json.dumps(body, indent=2, sort_keys=True) + "\n").encode("utf-8")


def exclusion_check(report: BenchReport) -> float:
    """Absolute gap between k * macro F1 and the summed valid per-query F1."""
    m = report.macro
    if m is None:
        return 0.0
    valid = [o.scores.f1 for o in report.per_query.values() if o.valid]
    return abs(m.f1 * len(valid) - math.fsum(valid))


def load_released_scores(path) -> dict[tuple[str, str], RmsScores]:
    """Read per-system macro scores (percent) from a report-format CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["setting"], row["model"])
            out[key] = RmsScores(*(float(row[c]) / 100 for c in REPORT_COLUMNS[3:]))
    return out


def replay_gap(report: BenchReport, released: RmsScores) -> float:
    """Largest absolute difference, in percentage points, across P/R/F1."""
    m = report.macro
    if m is None:
        return math.inf
    pairs = zip((m.precision, m.recall, m.f1), (released.precision, released.recall, released.f1))
    return max(abs(a - b) * 100 for a, b in pairs)
