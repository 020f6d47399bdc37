"""Spin arrays: sites, XXZ coupling edges and the standard geometries."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

GEOMETRIES = ("open_chain", "cyclic_chain", "rectangular", "spin_star", "custom")


class LatticeError(ValueError):
    pass


def twice_spin(spin) -> int:
    """Convert a spin given as 0.5, "1/2", Fraction or int to the integer 2s."""
    if isinstance(spin, str):
        spin = Fraction(spin.strip())
    frac = Fraction(spin).limit_denominator(2)
    two_s = 2 * frac
    if two_s.denominator != 1 or abs(float(Fraction(spin)) - float(frac)) > 1e-12:
        raise LatticeError(f"spin {spin!r} is not a half-integer")
    two_s = int(two_s)
    if two_s < 1:
        raise LatticeError(f"spin must be >= 1/2, got {spin!r}")
    return two_s


def spin_label(two_s: int) -> str:
    return str(two_s // 2) if two_s % 2 == 0 else f"{two_s}/2"


@dataclass(frozen=True)
class Site:
    index: int
    two_s: int

    @property
    def spin(self) -> float:
        return self.two_s / 2

    @property
    def dim(self) -> int:
        return self.two_s + 1


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    j_xy: float
    j_z: float

    @property
    def delta(self) -> float:
        """Anisotropy J_z / J; infinite when J == 0."""
        if self.j_xy == 0:
            return float("inf") if self.j_z >= 0 else float("-inf")
        return self.j_z / self.j_xy


@dataclass(frozen=True)
class SpinGraph:
    sites: tuple[Site, ...]
    edges: tuple[Edge, ...]
    geometry: str = "custom"
    shape: tuple[int, int] | None = None
    _edge_lookup: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.sites)
        if n < 2:
            raise LatticeError(f"need at least 2 sites, got {n}")
        if self.geometry not in GEOMETRIES:
            raise LatticeError(f"unknown geometry {self.geometry!r}")
        for k, site in enumerate(self.sites):
            if site.index != k:
                raise LatticeError("site indices must be 0..N-1 in order")
            if site.two_s < 1:
                raise LatticeError(f"site {k}: 2s must be >= 1")
        lookup = {}
        for e_id, e in enumerate(self.edges):
            if not (0 <= e.i < e.j < n):
                raise LatticeError(f"edge {e_id}: need 0 <= i < j < N, got ({e.i}, {e.j})")
            if (e.i, e.j) in lookup:
                raise LatticeError(f"duplicate edge ({e.i}, {e.j})")
            lookup[(e.i, e.j)] = e_id
        if self.geometry == "rectangular":
            if self.shape is None or self.shape[0] * self.shape[1] != n:
                raise LatticeError("rectangular graph needs a consistent shape")
        object.__setattr__(self, "_edge_lookup", lookup)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def two_spins(self) -> np.ndarray:
        return np.array([s.two_s for s in self.sites], dtype=np.int64)

    @property
    def spins(self) -> np.ndarray:
        return self.two_spins / 2.0

    @property
    def dims(self) -> np.ndarray:
        return self.two_spins + 1

    @property
    def two_S(self) -> int:
        """Twice the maximal total magnetization S = sum_i s_i."""
        return int(self.two_spins.sum())

    @property
    def hilbert_dim(self) -> int:
        return int(np.prod([s.dim for s in self.sites], dtype=object))

    @property
    def is_uniform_spin(self) -> bool:
        return len({s.two_s for s in self.sites}) == 1

    def edge_id(self, i: int, j: int) -> int:
        """Index of the edge joining ``i`` and ``j`` (either order)."""
        key = (i, j) if i < j else (j, i)
        try:
            return self._edge_lookup[key]
        except KeyError:
            raise LatticeError(f"no edge between {i} and {j}") from None

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in self._edge_lookup

    def neighbors(self) -> list[list[int]]:
        adj = [[] for _ in self.sites]
        for e in self.edges:
            adj[e.i].append(e.j)
            adj[e.j].append(e.i)
        return [sorted(a) for a in adj]

    def deltas(self) -> np.ndarray:
        return np.array([e.delta for e in self.edges], dtype=float)

    def edge_arrays(self):
        """Edge endpoints and couplings as arrays ``(i, j, j_xy, j_z)``."""
        ei = np.array([e.i for e in self.edges], dtype=np.int64)
        ej = np.array([e.j for e in self.edges], dtype=np.int64)
        jxy = np.array([e.j_xy for e in self.edges], dtype=float)
        jz = np.array([e.j_z for e in self.edges], dtype=float)
        return ei, ej, jxy, jz

    def is_connected(self) -> bool:
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_sites

    def coords(self, index: int) -> tuple[int, int]:
        """Row-major (row, col) of a site on a rectangular graph."""
        if self.shape is None:
            raise LatticeError("coords are only defined for rectangular graphs")
        return divmod(index, self.shape[1])

    def to_dict(self) -> dict:
        """Explicit site/edge serialization; inverse of :func:`graph_from_dict`."""
        d = {
            "geometry": self.geometry,
            "sites": [spin_label(s.two_s) for s in self.sites],
            "edges": [[e.i, e.j, e.j_xy, e.j_z] for e in self.edges],
        }
        if self.shape is not None:
            d["shape"] = list(self.shape)
        return d


def _check_size(n, minimum, what="N"):
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise LatticeError(f"{what} must be an integer >= {minimum}, got {n!r}")


def build_chain(n: int, spin, j_xy: float, j_z: float, cyclic: bool = False) -> SpinGraph:
    """Uniform first-neighbour chain; ``cyclic`` adds the (N-1, 0) bond."""
    _check_size(n, 3 if cyclic else 2)
    two_s = twice_spin(spin)
    sites = tuple(Site(k, two_s) for k in range(n))
    edges = [Edge(k, k + 1, float(j_xy), float(j_z)) for k in range(n - 1)]
    if cyclic:
        edges.append(Edge(0, n - 1, float(j_xy), float(j_z)))
    return SpinGraph(sites, tuple(edges), "cyclic_chain" if cyclic else "open_chain")


def build_rectangular(rows: int, cols: int, spin, j_xy: float, j_z: float) -> SpinGraph:
    """Open rows x cols array, row-major site order, first neighbours only."""
    _check_size(rows, 1, "rows")
    _check_size(cols, 1, "cols")
    if rows * cols < 2:
        raise LatticeError("a 1x1 array has no couplings")
    two_s = twice_spin(spin)
    n = rows * cols
    sites = tuple(Site(k, two_s) for k in range(n))
    edges = []
    for r in range(rows):
        for c in range(cols):
            k = r * cols + c
            if c + 1 < cols:
                edges.append(Edge(k, k + 1, float(j_xy), float(j_z)))
            if r + 1 < rows:
                edges.append(Edge(k, k + cols, float(j_xy), float(j_z)))
    return SpinGraph(sites, tuple(edges), "rectangular", (rows, cols))


def build_spin_star(n: int, spin, j_xy: float, j_z: float) -> SpinGraph:
    """Hub at site 0 coupled to N-1 mutually uncoupled leaves."""
    _check_size(n, 2)
    two_s = twice_spin(spin)
    sites = tuple(Site(k, two_s) for k in range(n))
    edges = tuple(Edge(0, k, float(j_xy), float(j_z)) for k in range(1, n))
    return SpinGraph(sites, edges, "spin_star")


def build_custom(spins: Sequence, edges: Iterable[Sequence]) -> SpinGraph:
    """Graph from explicit per-site spins and ``(i, j, j_xy, j_z)`` edges."""
    sites = tuple(Site(k, twice_spin(s)) for k, s in enumerate(spins))
    elist = []
    for e in edges:
        i, j, jxy, jz = e
        i, j = int(i), int(j)
        if i == j:
            raise LatticeError(f"self-edge at site {i}")
        if i > j:
            i, j = j, i
        elist.append(Edge(i, j, float(jxy), float(jz)))
    return SpinGraph(sites, tuple(elist), "custom")


def graph_from_dict(d: dict) -> SpinGraph:
    """Build a graph from a scenario ``graph`` block.

    Accepts either builder shorthand (``{"geometry": "cyclic_chain", "N": 8,
    "spin": 1, "j_xy": 1, "j_z": 1.2}``) or the explicit form written by
    :meth:`SpinGraph.to_dict`.
    """
    geometry = d.get("geometry", "custom")
    if "sites" in d:
        g = build_custom(d["sites"], d.get("edges", []))
        shape = tuple(d["shape"]) if "shape" in d else None
        return SpinGraph(g.sites, g.edges, geometry, shape)
    spin = d.get("spin", "1/2")
    jxy = d.get("j_xy", 1.0)
    jz = d.get("j_z", 1.0)
    if geometry == "open_chain":
        return build_chain(d["N"], spin, jxy, jz, cyclic=False)
    if geometry == "cyclic_chain":
        return build_chain(d["N"], spin, jxy, jz, cyclic=True)
    if geometry == "rectangular":
        return build_rectangular(d["rows"], d["cols"], spin, jxy, jz)
    if geometry == "spin_star":
        return build_spin_star(d["N"], spin, jxy, jz)
    raise LatticeError(f"geometry {geometry!r} needs explicit sites and edges")
