"""Typed comparison tables, deterministic queries over them, and table-similarity scoring."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
