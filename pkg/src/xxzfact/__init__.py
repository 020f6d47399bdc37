"""Exact ground-state factorization in finite XXZ spin arrays.

Submodules: ``lattice`` (geometry), ``factorization`` (separable solutions
and their counting), ``exact`` (sector-resolved diagonalization),
``analytic`` (closed forms), ``entanglement`` (pair states, negativity),
``sweep`` (field-plane scans) and ``cli``.
"""
from ._accel import backend_name
from .factorization import count_configurations, factorize, factorizing_fields
from .lattice import build_chain, build_custom, build_rectangular, build_spin_star

__version__ = "0.1.0"

__all__ = [
    "backend_name", "build_chain", "build_custom", "build_rectangular", "build_spin_star",
    "count_configurations", "factorize", "factorizing_fields", "__version__",
]
