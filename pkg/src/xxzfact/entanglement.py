"""Two-site reduced states, partial transpose, negativity and concurrence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact.basis import SectorBasis

PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PairDensityMatrix:
    """Reduced state of two spins in the lexicographic ``(m_i, m_j)`` basis.

    ``matrix`` has shape ``((2s_i+1)(2s_j+1),)*2``; ``provenance`` is one of
    ``"analytic_pair"``, ``"partial_trace_ed"`` or ``"one_magnon"``.
    """
    two_s_i: int
    two_s_j: int
    matrix: np.ndarray
    provenance: str = "partial_trace_ed"

    @property
    def dims(self) -> tuple[int, int]:
        return self.two_s_i + 1, self.two_s_j + 1

    def pair_two_m(self) -> np.ndarray:
        """2(m_i + m_j) for every basis state of the pair."""
        di, dj = self.dims
        ui, uj = np.divmod(np.arange(di * dj), dj)
        return 2 * ui - self.two_s_i + 2 * uj - self.two_s_j

    def blocks(self) -> dict[int, np.ndarray]:
        """Diagonal blocks labelled by twice the pair magnetization."""
        tm = self.pair_two_m()
        return {int(m): self.matrix[np.ix_(tm == m, tm == m)] for m in np.unique(tm)}

    def is_block_diagonal(self, tol: float = 1e-12) -> bool:
        tm = self.pair_two_m()
        off = tm[:, None] != tm[None, :]
        return bool(np.all(np.abs(self.matrix[off]) <= tol))

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class NegativityResult:
    pair: tuple[int, int] | None
    value: float
    source: str = "ed"

    def __float__(self):
        return self.value


def partial_trace(state, basis: SectorBasis, keep) -> PairDensityMatrix:
    """Reduced density matrix of sites ``keep = (i, j)`` from a normalized vector."""
    i, j = (int(x) for x in keep)
    if i == j:
        raise ValueError("partial trace needs two distinct sites")
    psi = np.asarray(state)
    if psi.shape != (len(basis),):
        raise ValueError("state length does not match the basis")
    ui = basis.digits[:, i]
    uj = basis.digits[:, j]
    di, dj = int(basis.dims[i]), int(basis.dims[j])
    rest = basis.codes - ui * basis.strides[i] - uj * basis.strides[j]
    _, col = np.unique(rest, return_inverse=True)
    row = ui * dj + uj
    mat = np.zeros((di * dj, int(col.max()) + 1), dtype=psi.dtype)
    mat[row, col] = psi
    rho = mat @ mat.conj().T
    if not np.iscomplexobj(rho):
        rho = 0.5 * (rho + rho.T)
    return PairDensityMatrix(int(basis.two_s[i]), int(basis.two_s[j]), rho, "partial_trace_ed")


def partial_transpose(rho: PairDensityMatrix, subsystem: int = 1) -> np.ndarray:
    di, dj = rho.dims
    t = rho.matrix.reshape(di, dj, di, dj)
    t = t.transpose(0, 3, 2, 1) if subsystem == 1 else t.transpose(2, 1, 0, 3)
    return t.reshape(di * dj, di * dj)


def negativity(rho: PairDensityMatrix, pair=None, source: str | None = None,
               subsystem: int = 1) -> NegativityResult:
    """``(Tr|rho^pt| - 1)/2`` from the eigenvalues of the partial transpose."""
    lam = rho.eigenvalues()
    if lam.min() < -PSD_TOL:
        raise ValueError(f"input is not positive semidefinite (min eigenvalue {lam.min():.3g})")
    pt = partial_transpose(rho, subsystem)
    mu = np.linalg.eigvalsh(pt)
    value = max(0.0, 0.5 * (np.sum(np.abs(mu)) - 1.0))
    if source is None:
        source = "analytic" if rho.provenance != "partial_trace_ed" else "ed"
    return NegativityResult(None if pair is None else tuple(pair), float(value), source)


_SYSY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=float)


def concurrence(rho: PairDensityMatrix) -> float:
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``."""
    if rho.dims != (2, 2):
        raise ValueError(f"concurrence needs two spin-1/2 sites, got dims {rho.dims}")
    r = rho.matrix
    tilde = _SYSY @ r.conj() @ _SYSY
    ev = np.linalg.eigvals(r @ tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
