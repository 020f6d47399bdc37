"""Sector-wise diagonalization, ground-state scans and local observables."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from ..lattice import SpinGraph
from .basis import SectorBasis, to_two
from .hamiltonian import SectorSystem, build_full, check_fields, direction_operator

DENSE_MAX = 4096
DEGENERACY_RTOL = 1e-8


def degeneracy_tol(energy: float) -> float:
    return DEGENERACY_RTOL * max(1.0, abs(energy))


def _start_vector(n, dtype=float):
    # deterministic, generic overlap with every sector state
    v = 1.0 + 0.1 * np.cos(np.arange(n) * 0.7548776662466927)
    return (v / np.linalg.norm(v)).astype(dtype)


def lowest_eigenpairs(matrix, k: int = 1, dense_max: int = DENSE_MAX,
                      highest: bool = False, vectors: bool = True):
    """Lowest (or highest) ``k`` eigenpairs of a Hermitian matrix.

    Dense LAPACK below ``dense_max``, implicitly restarted Lanczos (ARPACK)
    above.  Eigenvalues are returned in ascending order of ``sign * E`` where
    sign is -1 for ``highest``.
    """
    n = matrix.shape[0]
    k = min(k, n)
    if n <= dense_max or k >= n - 1:
        a = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        if highest:
            a = -a
        if vectors:
            w, v = la.eigh(a, subset_by_index=[0, k - 1])
        else:
            w = la.eigh(a, subset_by_index=[0, k - 1], eigvals_only=True)
            v = None
    else:
        op = -matrix if highest else matrix
        w, v = sla.eigsh(op, k=k, which="SA", v0=_start_vector(n, op.dtype),
                         tol=0, maxiter=max(1000, 20 * n))
        order = np.argsort(w)
        w = w[order]
        v = v[:, order] if vectors else None
    if highest:
        w = -w
    return w, v


@dataclass
class SectorSpectrum:
    two_M: int
    energies: np.ndarray
    vectors: np.ndarray | None
    residuals: np.ndarray | None = None


@dataclass
class SpectrumResult:
    """Per-sector extreme eigenvalues and the global ground data.

    With ``which == "highest"`` the roles are mirrored: ``extreme_energy`` is
    the largest eigenvalue and ``ground_sectors`` hold it.
    """
    which: str
    sectors: dict[int, SectorSpectrum]
    extreme_energy: float
    ground_sectors: list[int]
    degeneracy: int
    tolerance: float
    bases: dict[int, SectorBasis] = field(default_factory=dict, repr=False)

    @property
    def ground_energy(self) -> float:
        return self.extreme_energy

    @property
    def min_energy(self):
        return self.extreme_energy if self.which == "lowest" else None

    @property
    def max_energy(self):
        return self.extreme_energy if self.which == "highest" else None

    def all_energies(self) -> np.ndarray:
        return np.sort(np.concatenate([s.energies for s in self.sectors.values()]))


def ground_scan(graph: SpinGraph, fields, k: int = 4, *, system: SectorSystem | None = None,
                dense_max: int = DENSE_MAX, budget: int = 200_000, vectors: bool = False,
                highest: bool = False, sectors=None) -> SpectrumResult:
    """Lowest ``k`` states in every magnetization sector and the global ground data.

    ``sectors`` restricts the scan to the given 2M labels.  Residuals
    ``||H v - E v||`` are checked against ``1e-10 * max|H_ij|`` whenever
    vectors are computed.
    """
    h = check_fields(graph, fields)
    system = system or SectorSystem(graph, budget)
    labels = system.labels if sectors is None else list(sectors)
    out: dict[int, SectorSpectrum] = {}
    for two_M in labels:
        block = system.block(two_M, h)
        mat = block.matrix
        w, v = lowest_eigenpairs(mat, k, dense_max, highest, vectors)
        res = None
        if vectors:
            res = np.linalg.norm(mat @ v - v * w[None, :], axis=0)
            scale = max(1.0, abs(mat).max())
            if np.any(res > 1e-10 * scale):
                raise ArithmeticError(
                    f"sector 2M={two_M}: eigenvector residual {res.max():.3g} above tolerance")
        out[two_M] = SectorSpectrum(two_M, w, v, res)
    sign = -1.0 if highest else 1.0
    extreme = sign * min(sign * s.energies[0] for s in out.values())
    tol = degeneracy_tol(extreme)
    ground = [m for m, s in out.items() if abs(s.energies[0] - extreme) <= tol]
    degeneracy = sum(int(np.sum(np.abs(s.energies - extreme) <= tol)) for s in out.values())
    return SpectrumResult("highest" if highest else "lowest", out, float(extreme),
                          sorted(ground), degeneracy, tol,
                          {m: system.basis(m) for m in labels})


def sector_extremes(system: SectorSystem, fields, dense_max: int = 512,
                    highest: bool = False) -> dict[int, float]:
    """Lowest (or highest) eigenvalue of every sector, eigenvalues only."""
    h = check_fields(system.graph, fields)
    out = {}
    for two_M in system.labels:
        w, _ = lowest_eigenpairs(system.block(two_M, h).matrix, 1, dense_max, highest, False)
        out[two_M] = float(w[0])
    return out


def expectation_sz(state, basis: SectorBasis, site: int) -> float:
    """``<S_site^z>`` of a normalized vector expressed in ``basis``."""
    state = np.asarray(state)
    return float(np.sum(basis.m[:, site] * np.abs(state) ** 2))


def sector_ground_state(system: SectorSystem, fields, two_M: int,
                        dense_max: int = DENSE_MAX):
    """Lowest eigenpair of one sector; raises if it is degenerate there."""
    block = system.block(two_M, fields)
    w, v = lowest_eigenpairs(block.matrix, min(2, block.dim), dense_max)
    if len(w) > 1 and abs(w[1] - w[0]) <= degeneracy_tol(w[0]):
        raise ArithmeticError(f"lowest state of sector 2M={two_M} is degenerate")
    return float(w[0]), v[:, 0], block.basis


def plateau_direction(graph: SpinGraph, fields, M, sites=(0, 1),
                      system: SectorSystem | None = None) -> float:
    """Angle of the ray along which plateau ``M`` borders plateau ``M - 1`` at a
    factorizing point, ``atan2(<S1>_M - <S1>_{M-1}, <S2>_{M-1} - <S2>_M)``.

    The sector states are the exact lowest states at ``fields``; returns
    ``pi/2`` (vertical) when the denominator vanishes.
    """
    two_M = to_two(M)
    system = system or SectorSystem(graph)
    _, v_hi, b_hi = sector_ground_state(system, fields, two_M)
    _, v_lo, b_lo = sector_ground_state(system, fields, two_M - 2)
    a, b = sites
    num = expectation_sz(v_hi, b_hi, a) - expectation_sz(v_lo, b_lo, a)
    den = expectation_sz(v_lo, b_lo, b) - expectation_sz(v_hi, b_hi, b)
    if abs(den) < 1e-14:
        return math.pi / 2
    return math.atan2(num, den)


@dataclass
class LocalFieldSpectra:
    strengths: np.ndarray
    energies: list[np.ndarray]      # lowest-k per strength, ascending
    compatible: bool


def local_parallel_field_spectrum(graph: SpinGraph, base_fields, sites, direction,
                                  strengths, k: int = 50, signs=None,
                                  dense_max: int = 1024,
                                  budget: int = 1 << 16) -> LocalFieldSpectra:
    """Lowest ``k`` levels of ``H(base_fields) - h_par * sum_{i in sites} n . S_i``.

    ``direction = (theta, phi)``.  The local field breaks S^z conservation, so
    the full product space is used.  When ``signs`` (the assignment behind
    ``base_fields``) is given, compatibility of the direction with one
    factorized state is checked and a warning issued otherwise.
    """
    theta, phi = direction
    sites = [int(s) for s in sites]
    compatible = True
    if signs is not None:
        compatible = _direction_compatible(graph, signs, sites, theta, phi)
        if not compatible:
            warnings.warn("no factorized state aligns every selected site along the "
                          "requested direction", RuntimeWarning, stacklevel=2)
    full = build_full(graph, base_fields, budget)
    h0 = full.matrix
    local = None
    for s in sites:
        op = direction_operator(full.basis, s, theta, phi)
        local = op if local is None else local + op
    energies = []
    strengths = np.asarray(strengths, dtype=float)
    for hp in strengths:
        mat = (h0 - hp * local).tocsr()
        w, _ = lowest_eigenpairs(mat, k, dense_max, vectors=False)
        energies.append(np.sort(w))
    return LocalFieldSpectra(strengths, energies, compatible)


def _direction_compatible(graph, signs, sites, theta, phi) -> bool:
    from ..factorization import propagate_angles

    if not sites:
        return True
    if not (0 < theta < math.pi):
        return False
    seed_site = sites[0]
    # seed the traversal so that the first selected site carries theta
    angles = propagate_angles(graph, signs, math.pi / 2)
    t = np.tan(angles.theta / 2)
    scale = math.tan(theta / 2) / t[seed_site]
    t_req = t * scale
    for s in sites:
        if t_req[s] <= 0:
            return False
        if abs(2 * math.atan(t_req[s]) - theta) > 1e-9:
            return False
    return True
