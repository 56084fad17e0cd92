"""LLM and embedding providers: HTTP clients plus offline test doubles."""
from __future__ import annotations

import os
import threading
import time
from typing import Mapping, Protocol, Sequence

import httpx

DEFAULT_TIMEOUT = float(os.environ.get("REVIEWGRAPH_TIMEOUT", "120"))
DEFAULT_RETRIES = int(os.environ.get("REVIEWGRAPH_RETRIES", "2"))


class ProviderError(RuntimeError):
    def __init__(self, message: str, status: int | None = None, retryable: bool = False, segment: int | None = None):
        super().__init__(message)
        self.status = status
        self.retryable = retryable
        self.segment = segment

    def at_segment(self, index: int) -> "ProviderError":
        return ProviderError(f"segment {index}: {self}", self.status, self.retryable, index)


class LLM(Protocol):
    id: str

    def complete(self, prompt: str, system: str = "") -> str: ...


class _Http:
    def __init__(self, base_url: str, model: str, timeout: float, retries: int, backoff: float, client):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._client = client

    def _post(self, path: str, body: dict) -> dict:
        last: ProviderError | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                if self._client is not None:
                    resp = self._client.post(self.base_url + path, json=body, timeout=self.timeout)
                else:
                    resp = httpx.post(self.base_url + path, json=body, timeout=self.timeout)
            except httpx.TimeoutException as exc:
                last = ProviderError(f"timeout after {self.timeout}s: {exc}", None, True)
                continue
            except httpx.TransportError as exc:
                last = ProviderError(f"transport error: {exc}", None, True)
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last = ProviderError(f"HTTP {resp.status_code}: {resp.text}", resp.status_code, True)
                continue
            if resp.status_code >= 400:
                # 4xx (including context-length rejections) are reported verbatim, never retried
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text}", resp.status_code, False)
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError(f"malformed response body: {exc}", resp.status_code, False) from None
        raise last


class HttpLLM(_Http):
    """Client for an Ollama-style ``/api/generate`` endpoint."""

    def __init__(self, base_url: str, model: str, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = DEFAULT_RETRIES, backoff: float = 1.0, client=None):
        super().__init__(base_url, model, timeout, retries, backoff, client)
        self.id = model

    def complete(self, prompt: str, system: str = "") -> str:
        data = self._post("/api/generate", {"model": self.model, "prompt": prompt, "system": system, "stream": False})
        if "response" not in data:
            raise ProviderError("response body lacks 'response'")
        return data["response"]


class HttpEmbedder(_Http):
    """Client for an Ollama-style ``/api/embed`` endpoint."""

    def __init__(self, base_url: str, model: str, timeout: float = DEFAULT_TIMEOUT,
                 retries: int = DEFAULT_RETRIES, backoff: float = 1.0, client=None):
        super().__init__(base_url, model, timeout, retries, backoff, client)
        self.id = model

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = self._post("/api/embed", {"model": self.model, "input": list(texts)})
        vectors = data.get("embeddings")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("response body lacks one embedding per input")
        return [[float(x) for x in v] for v in vectors]


class ScriptedLLM:
    """Replies from a fixed script: a callable, or a list consumed in order."""

    def __init__(self, script, id: str = "scripted"):
        self.id = id
        self._script = script
        self._lock = threading.Lock()
        self._i = 0
        self.prompts: list[str] = []

    def complete(self, prompt: str, system: str = "") -> str:
        with self._lock:
            self.prompts.append(prompt)
            if callable(self._script):
                return self._script(prompt, system)
            reply = self._script[self._i % len(self._script)]
            self._i += 1
        if isinstance(reply, Exception):
            raise reply
        return reply


class GoldEchoLLM:
    """Answers each known query with its gold table.

    The query is recognised by its text appearing in the prompt. With
    ``require_context`` the gold body must also be present in the prompt, so a
    retrieval miss yields a refusal instead of the answer.
    """

    REFUSAL = "The provided context does not contain the requested information."

    def __init__(self, answers: Mapping[str, str], require_context: bool = False, id: str = "gold-echo",
                 overrides: Mapping[str, str] | None = None):
        self.id = id
        self.answers = dict(answers)
        self.require_context = require_context
        self.overrides = dict(overrides or {})

    def complete(self, prompt: str, system: str = "") -> str:
        hits = [q for q in self.answers if q in prompt]
        if not hits:
            return self.REFUSAL
        query = max(hits, key=len)
        if query in self.overrides:
            return self.overrides[query]
        gold = self.answers[query]
        if self.require_context:
            body = gold.strip().split("\n", 1)[-1]
            if body not in prompt:
                return self.REFUSAL
        return gold


class Throttled:
    """Bound the number of in-flight calls to a shared provider."""

    def __init__(self, inner, max_in_flight: int):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        self.inner = inner
        self.id = inner.id
        self._sem = threading.BoundedSemaphore(max_in_flight)

    def complete(self, prompt: str, system: str = "") -> str:
        with self._sem:
            return self.inner.complete(prompt, system)

    def embed(self, texts):
        with self._sem:
            return self.inner.embed(texts)


def provider_from_config(spec: Mapping) -> object:
    """Build a provider from a mapping such as ``{"kind": "http-llm", "url": ..., "model": ...}``."""
    kind = spec.get("kind")
    opts = {k: spec[k] for k in ("timeout", "retries", "backoff") if k in spec}
    if kind == "http-llm":
        p = HttpLLM(spec["url"], spec["model"], **opts)
    elif kind == "http-embed":
        p = HttpEmbedder(spec["url"], spec["model"], **opts)
    elif kind == "hash-embed":
        from .embed import HashEmbedder

        p = HashEmbedder(int(spec.get("dimension", 512)))
    else:
        raise ValueError(f"unknown provider kind {kind!r}")
    if "max_in_flight" in spec:
        p = Throttled(p, int(spec["max_in_flight"]))
    return p

