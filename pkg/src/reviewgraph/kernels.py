"""Kernel selection: compiled extension when importable, else pure Python.

Set ``REVIEWGRAPH_PURE=1`` to force the fallback.
"""
import os

if os.environ.get("REVIEWGRAPH_PURE"):
    from ._kernels_py import hungarian, levenshtein, nl_distance, nl_matrix

    BACKEND = "python"
else:
    try:
        from ._kernels import hungarian, levenshtein, nl_distance, nl_matrix

        BACKEND = "cython"
    except ImportError:
        from ._kernels_py import hungarian, levenshtein, nl_distance, nl_matrix

        BACKEND = "python"

__all__ = ["BACKEND", "hungarian", "levenshtein", "nl_distance", "nl_matrix"]
