"""Document QA: full-context, retrieval-augmented and table-context prompting."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from importlib import resources
from string import Template
from typing import Callable, Sequence, Union

from ..tableio import ResultTable, TableFormatError, import_comparison_csv, parse_result_table, result_to_csv
from .index import VectorIndex, build_index, retrieve
from .providers import ProviderError
from .segment import RagConfig, segment_text

PROMPT_VERSION = "v1"
SEGMENT_BREAK = "\n\n[...]\n\n"


@dataclass(frozen=True)
class Templates:
    system: str
    full_context: str
    rag: str
    symbolic: str

    @classmethod
    def load(cls, version: str = PROMPT_VERSION) -> "Templates":
        base = resources.files("reviewgraph.rag") / "prompts" / version
        read = lambda name: (base / f"{name}.txt").read_text(encoding="utf-8")  # noqa: E731
        return cls(read("system").strip(), read("full_context"), read("rag"), read("symbolic"))


@dataclass(frozen=True)
class QaRequest:
    query: str
    context: tuple[str, ...]
    system: str


@dataclass(frozen=True)
class QaResponse:
    raw_text: str
    table: ResultTable | None
    error: str | None
    latency: float
    provider_id: str

    @property
    def valid(self) -> bool:
        return self.table is not None

    def to_bytes(self) -> bytes:
        body = {
            "provider": self.provider_id,
            "raw_text": self.raw_text,
            "table": result_to_csv(self.table).decode("utf-8") if self.table is not None else None,
            "error": self.error,
            "latency": self.latency,
        }
        return json.dumps(body, sort_keys=True, ensure_ascii=False).encode("utf-8")


_DEFAULT: Templates | None = None


def default_templates() -> Templates:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Templates.load()
    return _DEFAULT


def render(template: str, query: str, context: str) -> str:
    return Template(template).substitute(query=query, context=context)


def ask(llm, request: QaRequest, template: str, clock: Callable[[], float] = time.perf_counter) -> QaResponse:
    """Send one request and parse the reply; failures become invalid responses."""
    prompt = render(template, request.query, SEGMENT_BREAK.join(request.context))
    start = clock()
    try:
        raw = llm.complete(prompt, request.system)
    except ProviderError as exc:
        return QaResponse("", None, f"provider error: {exc}", clock() - start, llm.id)
    latency = clock() - start
    try:
        table = parse_result_table(raw)
    except TableFormatError as exc:
        return QaResponse(raw, None, f"parse failure: {exc}", latency, llm.id)
    return QaResponse(raw, table, None, latency, llm.id)


def answer_full_context(doc: str, query: str, llm, templates: Templates | None = None, clock=time.perf_counter) -> QaResponse:
    t = templates or default_templates()
    return ask(llm, QaRequest(query, (doc,), t.system), t.full_context, clock)


def answer_rag(
    doc: Union[str, VectorIndex],
    query: str,
    cfg: RagConfig,
    embedder,
    llm,
    templates: Templates | None = None,
    clock=time.perf_counter,
) -> QaResponse:
    t = templates or default_templates()
    if isinstance(doc, VectorIndex):
        index = doc
    else:
        try:
            index = build_index(segment_text(doc, cfg), embedder)
        except ProviderError as exc:
            return QaResponse("", None, f"embedding error: {exc}", 0.0, llm.id)
    if len(index) == 0:
        raise ValueError("empty index")
    try:
        picked = retrieve(index, query, cfg)
    except ProviderError as exc:
        return QaResponse("", None, f"embedding error: {exc}", 0.0, llm.id)
    return ask(llm, QaRequest(query, tuple(s.text for s in picked), t.system), t.rag, clock)


def answer_symbolic_context(
    comparison_csv: Union[bytes, Sequence[bytes]],
    query: str,
    llm,
    templates: Templates | None = None,
    clock=time.perf_counter,
) -> QaResponse:
    t = templates or default_templates()
    blobs = [comparison_csv] if isinstance(comparison_csv, (bytes, bytearray)) else list(comparison_csv)
    texts = []
    for blob in blobs:
        import_comparison_csv(blob)  # malformed input fails here, before any provider call
        texts.append(blob.decode("utf-8"))
    return ask(llm, QaRequest(query, tuple(texts), t.system), t.symbolic, clock)
