"""XXZ Hamiltonian blocks

    H = -sum_i h_i S_i^z - sum_<ij> [ J_ij (S_i^x S_j^x + S_i^y S_j^y) + Jz_ij S_i^z S_j^z ]

restricted to fixed total magnetization.  The exchange part does not depend on
the fields, so it is built once per sector and reused; the field enters only
through the diagonal ``-sum_i h_i m_i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..lattice import SpinGraph
from . import _kernels
from .basis import SectorBasis, full_basis, sector_basis, sector_labels, to_two


def check_fields(graph: SpinGraph, fields) -> np.ndarray:
    h = np.asarray(fields, dtype=float)
    if h.shape != (graph.n_sites,):
        raise ValueError(f"field vector must have length {graph.n_sites}, got shape {h.shape}")
    return h


def exchange_matrix(graph: SpinGraph, basis: SectorBasis) -> sp.csr_matrix:
    """Field-independent part of H on ``basis`` (hopping plus Ising diagonal)."""
    ei, ej, jxy, jz = graph.edge_arrays()
    two_s = basis.two_s
    rows, cols, vals = _kernels.hopping_coo(basis.codes, basis.dims, basis.strides,
                                            two_s, ei, ej, -0.5 * jxy)
    diag = _kernels.zz_diagonal(basis.codes, basis.dims, basis.strides, two_s, ei, ej, jz)
    n = len(basis)
    idx = np.arange(n, dtype=np.int64)
    mat = sp.coo_matrix((np.concatenate([vals, diag]),
                         (np.concatenate([rows, idx]), np.concatenate([cols, idx]))),
                        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def field_diagonal(basis: SectorBasis, fields) -> np.ndarray:
    return -(basis.m @ np.asarray(fields, dtype=float))


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """H restricted to one magnetization sector (``two_M=None``: full space)."""
    two_M: int | None
    basis: SectorBasis
    exchange: sp.csr_matrix
    field_diag: np.ndarray

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return (self.exchange + sp.diags(self.field_diag, format="csr")).tocsr()

    @property
    def dim(self) -> int:
        return len(self.basis)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def matvec(self, v):
        return self.exchange @ v + self.field_diag * v


class SectorSystem:
    """Per-graph cache of sector bases and exchange matrices."""

    def __init__(self, graph: SpinGraph, budget: int | None = 200_000):
        self.graph = graph
        self.budget = budget
        self._bases: dict[int, SectorBasis] = {}
        self._exchange: dict[int, sp.csr_matrix] = {}

    @property
    def labels(self) -> list[int]:
        return sector_labels(self.graph)

    def basis(self, two_M: int) -> SectorBasis:
        if two_M not in self._bases:
            self._bases[two_M] = sector_basis(self.graph, two_M, self.budget)
        return self._bases[two_M]

    def exchange(self, two_M: int) -> sp.csr_matrix:
        if two_M not in self._exchange:
            self._exchange[two_M] = exchange_matrix(self.graph, self.basis(two_M))
        return self._exchange[two_M]

    def block(self, two_M: int, fields) -> BlockHamiltonian:
        h = check_fields(self.graph, fields)
        basis = self.basis(two_M)
        return BlockHamiltonian(two_M, basis, self.exchange(two_M), field_diagonal(basis, h))


def build_sector(graph: SpinGraph, fields, M, budget: int | None = 200_000) -> BlockHamiltonian:
    """Block of H with total magnetization ``M`` (a half-integer)."""
    two_M = to_two(M)
    h = check_fields(graph, fields)
    basis = sector_basis(graph, two_M, budget)
    return BlockHamiltonian(two_M, basis, exchange_matrix(graph, basis), field_diagonal(basis, h))


def build_full(graph: SpinGraph, fields, budget: int | None = 1 << 16) -> BlockHamiltonian:
    """H on the whole product space, lexicographic order."""
    h = check_fields(graph, fields)
    basis = full_basis(graph, budget)
    return BlockHamiltonian(None, basis, exchange_matrix(graph, basis), field_diagonal(basis, h))


def site_operator(basis: SectorBasis, site: int, kind: str) -> sp.csr_matrix:
    """Single-site ``S^z``, ``S^+`` or ``S^-`` on a full-space basis."""
    if basis.two_M is not None:
        raise ValueError("raising/lowering operators need the full basis")
    n = len(basis)
    u = basis.digits[:, site]
    two_s = int(basis.two_s[site])
    idx = np.arange(n)
    if kind == "z":
        return sp.diags(basis.m[:, site], format="csr")
    if kind == "+":
        mask = u < two_s
        amp = np.sqrt(((two_s - u[mask]) * (u[mask] + 1)).astype(float))
        tgt = idx[mask] + basis.strides[site]
    elif kind == "-":
        mask = u > 0
        amp = np.sqrt((u[mask] * (two_s - u[mask] + 1)).astype(float))
        tgt = idx[mask] - basis.strides[site]
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    return sp.csr_matrix((amp, (tgt, idx[mask])), shape=(n, n))


def direction_operator(basis: SectorBasis, site: int, theta: float, phi: float = 0.0):
    """``n . S_site`` for ``n = (sin t cos p, sin t sin p, cos t)``; complex if p != 0."""
    sz = site_operator(basis, site, "z")
    sp_ = site_operator(basis, site, "+")
    sm = site_operator(basis, site, "-")
    c = 0.5 * np.sin(theta)
    if phi == 0.0:
        return np.cos(theta) * sz + c * (sp_ + sm)
    return (np.cos(theta) * sz + c * np.exp(-1j * phi) * sp_ + c * np.exp(1j * phi) * sm).tocsr()
