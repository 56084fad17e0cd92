"""Document question answering over extracted paper text."""
from .embed import HashEmbedder, cosine
from .index import VectorIndex, build_index, rank, retrieve
from .pipeline import QaRequest, QaResponse, Templates, answer_full_context, answer_rag, answer_symbolic_context
from .providers import GoldEchoLLM, HttpEmbedder, HttpLLM, ProviderError, ScriptedLLM, Throttled, provider_from_config
from .segment import RagConfig, Segment, segment_text

__all__ = [
    "GoldEchoLLM",
    "HashEmbedder",
    "HttpEmbedder",
    "HttpLLM",
    "ProviderError",
    "QaRequest",
    "QaResponse",
    "RagConfig",
    "ScriptedLLM",
    "Segment",
    "Templates",
    "Throttled",
    "VectorIndex",
    "answer_full_context",
    "answer_rag",
    "answer_symbolic_context",
    "build_index",
    "cosine",
    "provider_from_config",
    "rank",
    "retrieve",
    "segment_text",
]
