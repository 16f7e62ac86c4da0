"""Exact matrix categories, charted 2-vector bundles, orientations, determinant
gerbes and connective structures."""

from .scalars import EXACT, DomainError, ExactComplex, ScalarMode

__version__ = "0.1.0"

__all__ = ["DomainError", "ExactComplex", "ScalarMode", "EXACT", "__version__"]
