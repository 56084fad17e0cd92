"""Per-document vector index and anchor-plus-neighbours retrieval."""
from __future__ import annotations

from dataclasses import dataclass

from .embed import cosine
from .providers import ProviderError
from .segment import RagConfig, Segment


@dataclass(frozen=True)
class VectorIndex:
    segments: tuple[Segment, ...]
    vectors: tuple[tuple[float, ...], ...]
    embedder: object

    def __len__(self):
        return len(self.segments)


def build_index(segments, embedder) -> VectorIndex:
    vectors = []
    dim = None
    for seg in segments:
        try:
            (vec,) = embedder.embed([seg.text])
        except ProviderError as exc:
            raise exc.at_segment(seg.index) from None
        if not any(vec):
            raise ValueError(f"segment {seg.index}: embedder returned a zero vector")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValueError(f"segment {seg.index}: dimension {len(vec)} differs from {dim}")
        vectors.append(tuple(vec))
    return VectorIndex(tuple(segments), tuple(vectors), embedder)


def rank(index: VectorIndex, query: str) -> list[tuple[float, int]]:
    """Segments by descending cosine score; ties go to the lower index."""
    (q,) = index.embedder.embed([query])
    if not any(q):
        raise ValueError("query embeds to a zero vector")
    scored = [(cosine(q, v), i) for i, v in enumerate(index.vectors)]
    scored.sort(key=lambda s: (-s[0], s[1]))
    return scored


def window(anchor: int, radius: int, n: int) -> range:
    return range(max(0, anchor - radius), min(n, anchor + radius + 1))


def retrieve(index: VectorIndex, query: str, cfg: RagConfig = RagConfig()) -> list[Segment]:
    if len(index) == 0:
        raise ValueError("empty index")
    picked: set[int] = set()
    for _, anchor in rank(index, query)[: cfg.top_k]:
        picked.update(window(anchor, cfg.neighbor_radius, len(index)))
    return [index.segments[i] for i in sorted(picked)]
