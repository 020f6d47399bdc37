"""Fixed-magnetization bases in lexicographic (m_1, ..., m_N) order."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..lattice import SpinGraph
from . import _kernels


class SectorError(ValueError):
    pass


class HilbertBudgetError(RuntimeError):
    """A sector or full space exceeds the configured dimension budget."""


def to_two(m) -> int:
    """Twice a (half-)integer magnetization; ints and floats accepted."""
    two = round(2 * float(m))
    if abs(two - 2 * float(m)) > 1e-9:
        raise SectorError(f"magnetization {m!r} is not a half-integer")
    return int(two)


def sector_labels(graph: SpinGraph) -> list[int]:
    """All realizable 2M values, from -2S to 2S in steps of 2."""
    two_S = graph.two_S
    return list(range(-two_S, two_S + 1, 2))


def check_sector(graph: SpinGraph, two_M: int) -> None:
    two_S = graph.two_S
    if abs(two_M) > two_S or (two_M - two_S) % 2:
        raise SectorError(f"M = {two_M}/2 is not realizable (S = {two_S}/2)")


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """States of total magnetization ``two_M / 2`` as sorted mixed-radix codes.

    ``two_M`` is ``None`` for the unrestricted full space.
    """
    two_M: int | None
    two_s: np.ndarray
    codes: np.ndarray

    @property
    def dims(self) -> np.ndarray:
        return self.two_s + 1

    @cached_property
    def strides(self) -> np.ndarray:
        return _kernels.strides_for(self.dims)

    @property
    def n_sites(self) -> int:
        return len(self.two_s)

    def __len__(self) -> int:
        return len(self.codes)

    @cached_property
    def digits(self) -> np.ndarray:
        """Local digits ``u_i = s_i + m_i`` per state, shape (dim, N)."""
        return _kernels.decode_numpy(self.codes, self.dims, self.strides)

    @cached_property
    def m(self) -> np.ndarray:
        """Local magnetizations ``m_i`` per state (floats), shape (dim, N)."""
        return self.digits - self.two_s[None, :] / 2.0

    def states(self):
        """Magnetization tuples in basis order."""
        return [tuple(row) for row in self.m]

    def index(self, ms) -> int:
        """Position of the state with local magnetizations ``ms``."""
        u = np.array([to_two(x) for x in ms], dtype=np.int64)
        u = (u + self.two_s) // 2
        code = int(np.dot(u, self.strides))
        pos = int(np.searchsorted(self.codes, code))
        if pos >= len(self.codes) or self.codes[pos] != code:
            raise SectorError(f"state {tuple(ms)} not in this basis")
        return pos


def sector_basis(graph: SpinGraph, two_M: int, budget: int | None = None) -> SectorBasis:
    check_sector(graph, two_M)
    two_s = graph.two_spins
    total = (two_M + graph.two_S) // 2
    if budget is not None and graph.hilbert_dim > 50 * budget:
        # the enumeration itself walks the full space
        raise HilbertBudgetError(
            f"full space of dimension {graph.hilbert_dim} is too large to enumerate "
            f"under a sector budget of {budget}")
    codes = _kernels.sector_codes(two_s + 1, total)
    if budget is not None and len(codes) > budget:
        raise HilbertBudgetError(
            f"sector 2M={two_M} has dimension {len(codes)} > budget {budget}")
    return SectorBasis(two_M, two_s, codes)


def full_basis(graph: SpinGraph, budget: int | None = None) -> SectorBasis:
    dim = graph.hilbert_dim
    if budget is not None and dim > budget:
        raise HilbertBudgetError(f"full space dimension {dim} > budget {budget}")
    return SectorBasis(None, graph.two_spins, np.arange(dim, dtype=np.int64))
