"""Harmonic extension, energy, Laplacian and gradient tools for the gaskets SG_N."""

from .harmonic_algebra import ConsistencyError, ExtensionFamily, beta, build_family, energy_norm, word_matrix
from .measure import MeasureSpec
from .words import Word, count_blocks, enumerate_blocks, is_block, truncate

__all__ = [
    "ConsistencyError",
    "ExtensionFamily",
    "MeasureSpec",
    "Word",
    "beta",
    "build_family",
    "count_blocks",
    "energy_norm",
    "enumerate_blocks",
    "is_block",
    "truncate",
    "word_matrix",
]
__version__ = "0.1.0"
