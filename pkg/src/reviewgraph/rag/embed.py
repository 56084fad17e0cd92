"""Embedding providers and vector math."""
from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from typing import Protocol, Sequence

_TOKEN = re.compile(r"\w+", re.UNICODE)


class Embedder(Protocol):
    id: str

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(x * x for x in b))
    if na == 0 or nb == 0:
        raise ValueError("cosine of a zero vector")
    c = math.fsum(x * y for x, y in zip(a, b)) / (na * nb)
    return max(-1.0, min(1.0, c))


class HashEmbedder:
    """Deterministic bag-of-words embedder using signed feature hashing.

    Term counts are damped to ``1 + ln(tf)`` so frequent function words do not
    swamp the rarer content words.
    """

    def __init__(self, dimension: int = 512):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.id = f"hash-{dimension}"

    def _vector(self, text: str) -> list[float]:
        vec = [0.0] * self.dimension
        for tok, tf in Counter(_TOKEN.findall(text.lower())).items():
            h = hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest()
            slot = int.from_bytes(h[:4], "little") % self.dimension
            weight = 1.0 + math.log(tf)
            vec[slot] += weight if h[4] & 1 else -weight
        return vec

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._vector(t) for t in texts]
