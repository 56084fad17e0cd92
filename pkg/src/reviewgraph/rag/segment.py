"""Lossless fixed-size document segmentation."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Segment:
    index: int
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class RagConfig:
    chunk_size: int = 8000
    chunk_overlap: int = 0
    top_k: int = 1
    neighbor_radius: int = 2
    soften_window: int = 200

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if self.chunk_overlap != 0:
            raise ValueError("segments are contiguous; chunk_overlap must be 0")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.neighbor_radius < 0 or self.soften_window < 0:
            raise ValueError("neighbor_radius and soften_window must be non-negative")


def segment_text(doc: str, cfg: RagConfig = RagConfig()) -> list[Segment]:
    """Cut ``doc`` into contiguous segments of at most ``chunk_size`` characters.

    A cut moves back to just after the last newline found within
    ``soften_window`` characters before the hard boundary; otherwise it is a
    hard cut. A remainder that fits in one segment is never split.
    """
    if not doc:
        raise ValueError("empty document")
    size = cfg.chunk_size
    window = min(cfg.soften_window, size - 1)
    out = []
    start = 0
    while start < len(doc):
        if len(doc) - start <= size:
            end = len(doc)
        else:
            end = start + size
            nl = doc.rfind("\n", end - window, end) if window > 0 else -1
            if nl >= start:
                end = nl + 1
        out.append(Segment(len(out), doc[start:end], (start, end)))
        start = end
    return out
