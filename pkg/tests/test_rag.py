import random
import threading
import time

import httpx
import pytest

from reviewgraph.rag import (
    GoldEchoLLM,
    HashEmbedder,
    HttpEmbedder,
    HttpLLM,
    ProviderError,
    RagConfig,
    ScriptedLLM,
    Throttled,
    answer_full_context,
    answer_rag,
    answer_symbolic_context,
    build_index,
    cosine,
    provider_from_config,
    rank,
    retrieve,
    segment_text,
)
from reviewgraph.rag.index import VectorIndex
from reviewgraph.rag.pipeline import Templates
from reviewgraph.rag.segment import Segment
from reviewgraph.tableio import TableFormatError, export_comparison_csv

# -- segmentation ---------------------------------------------------------------------


def rand_doc(rng):
    parts = []
    for _ in range(rng.randint(1, 60)):
        word = "".join(rng.choice("abcdé \t") for _ in range(rng.randint(0, 300)))
        parts.append(word + rng.choice(["\n", "\n\n", "", " "]))
    return "".join(parts) or "x"


def test_segmentation_is_lossless():
    rng = random.Random(1)
    start = time.perf_counter()
    for _ in range(150):
        doc = rand_doc(rng)
        cfg = RagConfig(chunk_size=rng.randint(1, 900), soften_window=rng.randint(0, 300))
        segs = segment_text(doc, cfg)
        assert "".join(s.text for s in segs) == doc
        assert [s.index for s in segs] == list(range(len(segs)))
        pos = 0
        for s in segs:
            assert s.char_span == (pos, pos + len(s.text))
            assert 0 < len(s.text) <= cfg.chunk_size
            pos += len(s.text)
    assert time.perf_counter() - start < 5


def test_soft_cut_prefers_newline():
    doc = "a" * 90 + "\n" + "b" * 30
    segs = segment_text(doc, RagConfig(chunk_size=100, soften_window=20))
    assert segs[0].text.endswith("\n") and len(segs[0].text) == 91
    hard = segment_text(doc, RagConfig(chunk_size=100, soften_window=5))
    assert len(hard[0].text) == 100


def test_short_document_single_segment():
    assert len(segment_text("short", RagConfig())) == 1
    with pytest.raises(ValueError):
        segment_text("", RagConfig())


@pytest.mark.parametrize("kw", [{"chunk_size": 0}, {"chunk_overlap": 10}, {"top_k": 0}, {"neighbor_radius": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RagConfig(**kw)


# -- retrieval --------------------------------------------------------------------------


class TableEmbedder:
    """Looks vectors up by exact text."""

    def __init__(self, table):
        self.table = table

    def embed(self, texts):
        return [list(self.table[t]) for t in texts]


def index_with(vectors, query_vec):
    segs = [Segment(i, f"s{i}", (i, i + 1)) for i in range(len(vectors))]
    table = {f"s{i}": v for i, v in enumerate(vectors)}
    table["q"] = query_vec
    return build_index(segs, TableEmbedder(table))


def one_hot(i, n):
    return [1.0 if k == i else 0.01 for k in range(n)]


def test_window_properties():
    rng = random.Random(4)
    for _ in range(300):
        n = rng.randint(1, 15)
        radius = rng.randint(0, 4)
        anchor = rng.randrange(n)
        idx = index_with([one_hot(i, n) for i in range(n)], one_hot(anchor, n))
        got = [s.index for s in retrieve(idx, "q", RagConfig(neighbor_radius=radius))]
        assert anchor in got
        assert got == list(range(got[0], got[-1] + 1))
        assert got[0] == max(0, anchor - radius) and got[-1] == min(n - 1, anchor + radius)


@pytest.mark.parametrize("anchor", ["first", "last"])
def test_boundary_clipping(anchor):
    n = 10
    a = 0 if anchor == "first" else n - 1
    idx = index_with([one_hot(i, n) for i in range(n)], one_hot(a, n))
    got = [s.index for s in retrieve(idx, "q", RagConfig(neighbor_radius=2))]
    assert got == ([0, 1, 2] if a == 0 else [7, 8, 9])


def test_tie_goes_to_lower_index():
    vecs = [[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]
    idx = index_with(vecs, [1.0, 0.0])
    assert rank(idx, "q")[0][1] == 1
    got = [s.index for s in retrieve(idx, "q", RagConfig(neighbor_radius=0))]
    assert got == [1]


def test_top_k_takes_union_of_windows():
    n = 12
    vecs = [one_hot(i, n) for i in range(n)]
    q = [0.0] * n
    q[1], q[9] = 1.0, 0.9
    got = [s.index for s in retrieve(index_with(vecs, q), "q", RagConfig(top_k=2, neighbor_radius=1))]
    assert got == [0, 1, 2, 8, 9, 10]


def test_index_rejects_bad_vectors():
    segs = [Segment(0, "a", (0, 1)), Segment(1, "b", (1, 2))]
    with pytest.raises(ValueError, match="zero vector"):
        build_index(segs, TableEmbedder({"a": [0.0, 0.0], "b": [1.0, 0.0]}))
    with pytest.raises(ValueError, match="dimension"):
        build_index(segs, TableEmbedder({"a": [1.0, 0.0], "b": [1.0, 0.0, 1.0]}))


def test_hash_embedder_deterministic_and_normalised():
    e = HashEmbedder(64)
    a, b = e.embed(["atomic layer deposition of alumina", "atomic layer deposition of alumina"])
    assert a == b and len(a) == 64
    assert cosine(a, a) == pytest.approx(1.0)
    assert cosine(*e.embed(["alumina growth", "alumina growth rate"])) > cosine(*e.embed(["alumina growth", "zzz qqq"]))


def test_embedder_failure_names_segment():
    class Boom:
        def embed(self, texts):
            if texts[0] == "b":
                raise ProviderError("down", 503, True)
            return [[1.0]]

    with pytest.raises(ProviderError, match="segment 1") as err:
        build_index([Segment(0, "a", (0, 1)), Segment(1, "b", (1, 2))], Boom())
    assert err.value.segment == 1


def test_fixture_retrieval_hits_table(corpus):
    cfg = RagConfig()
    for case in corpus.cases:
        doc = case.document()
        idx = build_index(segment_text(doc, cfg), HashEmbedder())
        picked = "".join(s.text for s in retrieve(idx, case.detailed_nl_query, cfg))
        gold_lines = (corpus.root / case.gold_table).read_text(encoding="utf-8").strip().splitlines()
        assert all(line in picked for line in gold_lines[1:]), case.id


# -- providers --------------------------------------------------------------------------


def counting_transport(statuses, body):
    calls = []

    def handler(request):
        calls.append(request)
        status = statuses[min(len(calls) - 1, len(statuses) - 1)]
        return httpx.Response(status, json=body if status == 200 else {"error": "x"})

    return httpx.Client(transport=httpx.MockTransport(handler)), calls


def test_http_llm_retries_5xx():
    client, calls = counting_transport([503, 502, 200], {"response": "a,b\n1,2"})
    llm = HttpLLM("http://h", "m", retries=2, backoff=0, client=client)
    assert llm.complete("p") == "a,b\n1,2"
    assert len(calls) == 3
    import json

    assert json.loads(calls[0].content) == {"model": "m", "prompt": "p", "system": "", "stream": False}


def test_http_llm_gives_up_after_retries():
    client, calls = counting_transport([500], {})
    with pytest.raises(ProviderError) as err:
        HttpLLM("http://h", "m", retries=2, backoff=0, client=client).complete("p")
    assert len(calls) == 3 and err.value.retryable and err.value.status == 500


def test_http_llm_4xx_not_retried():
    client, calls = counting_transport([400], {})
    with pytest.raises(ProviderError, match="HTTP 400") as err:
        HttpLLM("http://h", "m", retries=3, backoff=0, client=client).complete("p")
    assert len(calls) == 1 and not err.value.retryable


def test_http_timeout_is_retryable():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    with pytest.raises(ProviderError, match="timeout") as err:
        HttpLLM("http://h", "m", retries=1, backoff=0, timeout=0.1, client=client).complete("p")
    assert err.value.retryable


def test_http_embedder():
    client, _ = counting_transport([200], {"embeddings": [[1, 2], [3, 4]]})
    assert HttpEmbedder("http://h", "e", client=client).embed(["a", "b"]) == [[1.0, 2.0], [3.0, 4.0]]
    client, _ = counting_transport([200], {"embeddings": [[1, 2]]})
    with pytest.raises(ProviderError):
        HttpEmbedder("http://h", "e", client=client).embed(["a", "b"])


def test_throttled_bounds_concurrency():
    live, peak, lock = [0], [0], threading.Lock()

    def slow(prompt, system):
        with lock:
            live[0] += 1
            peak[0] = max(peak[0], live[0])
        time.sleep(0.01)
        with lock:
            live[0] -= 1
        return "ok"

    t = Throttled(ScriptedLLM(slow), 2)
    threads = [threading.Thread(target=t.complete, args=("p",)) for _ in range(10)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert peak[0] <= 2
    with pytest.raises(ValueError):
        Throttled(ScriptedLLM(["x"]), 0)


def test_provider_from_config():
    assert isinstance(provider_from_config({"kind": "hash-embed", "dimension": 32}), HashEmbedder)
    assert isinstance(provider_from_config({"kind": "http-llm", "url": "http://h", "model": "m", "max_in_flight": 1}),
                      Throttled)
    with pytest.raises(ValueError):
        provider_from_config({"kind": "nope"})


def test_gold_echo():
    llm = GoldEchoLLM({"which films": "a,b\n1,2\n"}, require_context=True)
    assert llm.complete("which films? context: 1,2") == "a,b\n1,2\n"
    assert llm.complete("which films? context: none") == GoldEchoLLM.REFUSAL
    assert llm.complete("something else") == GoldEchoLLM.REFUSAL


# -- pipeline --------------------------------------------------------------------------


def test_templates_load():
    t = Templates.load("v1")
    for body in (t.full_context, t.rag, t.symbolic):
        assert "$context" in body and "$query" in body


def test_full_context_valid_and_invalid():
    resp = answer_full_context("doc", "q?", ScriptedLLM(["a,b\n1,2"]))
    assert resp.valid and resp.table.columns == ["a", "b"]
    resp = answer_full_context("doc", "q?", ScriptedLLM(["I cannot tell."]))
    assert not resp.valid and resp.error.startswith("parse failure")
    resp = answer_full_context("doc", "q?", ScriptedLLM([ProviderError("HTTP 400: too long", 400)]))
    assert not resp.valid and "HTTP 400" in resp.error


def test_prompt_carries_document_and_query():
    llm = ScriptedLLM(["a,b\n1,2"])
    answer_full_context("THE DOC", "THE QUESTION", llm)
    assert "THE DOC" in llm.prompts[0] and "THE QUESTION" in llm.prompts[0]


def test_latency_uses_clock():
    ticks = iter([10.0, 12.5])
    resp = answer_full_context("d", "q", ScriptedLLM(["a,b\n1,2"]), clock=lambda: next(ticks))
    assert resp.latency == 2.5


def test_rag_sends_only_window():
    doc = "".join(f"para{i} " * 30 + "\n" for i in range(40))
    llm = ScriptedLLM(["a,b\n1,2"])
    cfg = RagConfig(chunk_size=400, neighbor_radius=1)
    resp = answer_rag(doc, "para20 para20", cfg, HashEmbedder(), llm)
    assert resp.valid
    assert "para20" in llm.prompts[0] and "para0 " not in llm.prompts[0]


def test_rag_empty_document():
    with pytest.raises(ValueError):
        answer_rag("", "q", RagConfig(), HashEmbedder(), ScriptedLLM(["x"]))


def test_rag_empty_index():
    with pytest.raises(ValueError, match="empty index"):
        answer_rag(VectorIndex((), (), HashEmbedder()), "q", RagConfig(), None, ScriptedLLM(["x"]))


def test_symbolic_rejects_malformed_before_call(store):
    llm = ScriptedLLM(["a,b\n1,2"])
    with pytest.raises(TableFormatError):
        answer_symbolic_context(b"not,a\nvalid", "q", llm)
    assert llm.prompts == []
    resp = answer_symbolic_context(export_comparison_csv(store["R1469158"]), "q", llm)
    assert resp.valid and len(llm.prompts) == 1
    assert "paper-id" in llm.prompts[0]


def test_response_bytes_stable():
    resp = answer_full_context("d", "q", ScriptedLLM(["a,b\n1,2"]), clock=iter([0.0, 1.0]).__next__)
    again = answer_full_context("d", "q", ScriptedLLM(["a,b\n1,2"]), clock=iter([0.0, 1.0]).__next__)
    assert resp.to_bytes() == again.to_bytes()
