"""Field-plane scans: ground magnetization diagrams and negativity profiles.

A field pattern maps the two sweep parameters (h1, h2) onto a site field
vector ``h_i = a_i h1 + b_i h2 + c_i``.  Exchange blocks are built once per
sector and only the diagonal changes across the grid.  When ``a_i + b_i`` is
the same for every site (alternating patterns), the sector energies along a
line ``h1 - h2 = const`` are exact straight lines in h2, so one
diagonalization per distinct difference covers the whole line.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .entanglement import negativity, partial_trace
from .exact.hamiltonian import SectorSystem
from .exact.spectrum import degeneracy_tol, lowest_eigenpairs
from .factorization import (FactorizationError, SignAssignment, _edge_field_strength,
                            factorizing_fields, named_signs)
from .lattice import SpinGraph

SCAN_DENSE_MAX = 256
CSV_COLUMNS = ("h1", "h2", "M2", "E", "boundary_flag")


# ---------------------------------------------------------------------------
# field patterns

@dataclass(frozen=True)
class FieldPattern:
    """Affine map ``(h1, h2) -> a * h1 + b * h2 + c`` onto site fields."""
    name: str
    a: tuple
    b: tuple
    c: tuple = ()

    def __post_init__(self):
        n = len(self.a)
        c = self.c or (0.0,) * n
        object.__setattr__(self, "c", tuple(float(x) for x in c))
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if not (len(self.b) == len(self.c) == n):
            raise ValueError("pattern coefficient vectors differ in length")

    @property
    def n_sites(self) -> int:
        return len(self.a)

    def fields(self, h1: float, h2: float) -> np.ndarray:
        return (np.asarray(self.a) * h1 + np.asarray(self.b) * h2 + np.asarray(self.c))

    def __call__(self, h1, h2):
        return self.fields(h1, h2)

    @property
    def kappa(self):
        """Common value of ``a_i + b_i`` if there is one, else ``None``."""
        s = np.asarray(self.a) + np.asarray(self.b)
        return float(s[0]) if np.allclose(s, s[0], rtol=0, atol=1e-14) else None

    def reflected_symmetric(self) -> bool:
        """True when ``fields(-h1, -h2) == -fields(h1, h2)``."""
        return bool(np.all(np.asarray(self.c) == 0.0))

    def check(self, graph: SpinGraph) -> None:
        if self.n_sites != graph.n_sites:
            raise ValueError(f"pattern {self.name!r} covers {self.n_sites} sites, "
                             f"graph has {graph.n_sites}")

    def to_dict(self) -> dict:
        return {"name": self.name, "a": list(self.a), "b": list(self.b), "c": list(self.c)}


def factorization_scaled_pattern(graph: SpinGraph, signs: SignAssignment,
                                 name: str = "custom") -> FieldPattern:
    """Pattern whose point ``(h1, h2) = (2h_s, -2h_s)`` is the factorizing field
    of ``signs``: a site with factorizing coefficient ``c_i h_s`` gets
    ``(c_i/2) h1`` if ``c_i > 0`` and ``(|c_i|/2) h2`` if ``c_i < 0``.

    Requires a uniform field scale ``h_s`` over the edges.
    """
    if not graph.is_uniform_spin:
        raise FactorizationError("mixed spins have no common field scale; use a custom pattern")
    strength = _edge_field_strength(graph)
    if len(strength) and not np.allclose(strength, strength[0], rtol=1e-12, atol=0):
        raise FactorizationError("edges carry different field scales; use a custom pattern")
    h_ff = factorizing_fields(graph, signs)
    # h_s = s J sqrt(Delta^2 - 1)
    scale = graph.spins[0] * strength[0] if len(strength) else 0.0
    if scale == 0.0:
        raise FactorizationError("|Delta| = 1 gives vanishing factorizing fields")
    coef = h_ff / scale
    a = np.where(coef > 1e-12, coef / 2, 0.0)
    b = np.where(coef < -1e-12, -coef / 2, 0.0)
    return FieldPattern(name, tuple(a), tuple(b))


def alternating_pattern(graph: SpinGraph) -> FieldPattern:
    """h1 on one sublattice (containing site 0), h2 on the other."""
    from .factorization import alternating_signs

    signs = alternating_signs(graph)
    colour = _colouring(graph)
    if graph.geometry in ("cyclic_chain",):
        return FieldPattern("alternating", tuple(1.0 - colour), tuple(colour.astype(float)))
    # open geometries: the alternating factorizing fields are weaker at borders
    pat = factorization_scaled_pattern(graph, signs, "lattice_alternating"
                                       if graph.geometry == "rectangular" else "alternating")
    return pat


def uniform_alternating_pattern(graph: SpinGraph) -> FieldPattern:
    """Plain two-valued sublattice pattern, regardless of borders."""
    colour = _colouring(graph)
    return FieldPattern("alternating_uniform", tuple(1.0 - colour), tuple(colour.astype(float)))


def _colouring(graph: SpinGraph) -> np.ndarray:
    colour = -np.ones(graph.n_sites, dtype=int)
    adj = graph.neighbors()
    for root in range(graph.n_sites):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if colour[v] < 0:
                    colour[v] = 1 - colour[u]
                    stack.append(v)
                elif colour[v] == colour[u]:
                    raise FactorizationError("graph is not bipartite")
    return colour.astype(float)


def next_alternating_pattern(graph: SpinGraph) -> FieldPattern:
    """(h1, 0, h2, 0, ...) on a chain."""
    return factorization_scaled_pattern(graph, named_signs(graph, "next_alternating"),
                                        "next_alternating")


def zero_bulk_pattern(graph: SpinGraph) -> FieldPattern:
    name = "lattice_zero_bulk" if graph.geometry == "rectangular" else "zero_bulk"
    return factorization_scaled_pattern(graph, named_signs(graph, "zero_bulk"), name)


def sites_pattern(n_sites: int, h1_sites, h2_sites, name: str = "zero_bulk") -> FieldPattern:
    """h1 on ``h1_sites``, h2 on ``h2_sites``, zero elsewhere."""
    a = np.zeros(n_sites)
    b = np.zeros(n_sites)
    a[list(h1_sites)] = 1.0
    b[list(h2_sites)] = 1.0
    if np.any(a * b):
        raise ValueError("a site cannot carry both h1 and h2")
    return FieldPattern(name, tuple(a), tuple(b))


PATTERNS = {
    "alternating": alternating_pattern,
    "lattice_alternating": alternating_pattern,
    "next_alternating": next_alternating_pattern,
    "zero_bulk": zero_bulk_pattern,
    "lattice_zero_bulk": zero_bulk_pattern,
}


def make_pattern(graph: SpinGraph, spec) -> FieldPattern:
    """Pattern from a name or a ``{"a": [...], "b": [...], "c": [...]}`` mapping."""
    if isinstance(spec, FieldPattern):
        spec.check(graph)
        return spec
    if isinstance(spec, str):
        if spec not in PATTERNS:
            raise ValueError(f"unknown pattern {spec!r}; choose from {sorted(PATTERNS)}")
        return PATTERNS[spec](graph)
    if "name" in spec and spec["name"] in PATTERNS and "a" not in spec:
        return PATTERNS[spec["name"]](graph)
    if "h1_sites" in spec:
        pat = sites_pattern(graph.n_sites, spec["h1_sites"], spec.get("h2_sites", ()),
                            spec.get("name", "custom"))
    else:
        pat = FieldPattern(spec.get("name", "custom"), tuple(spec["a"]), tuple(spec["b"]),
                           tuple(spec.get("c", ())))
    pat.check(graph)
    return pat


# ---------------------------------------------------------------------------
# grids and diagrams

@dataclass(frozen=True)
class GridSpec:
    h1_min: float
    h1_max: float
    h2_min: float
    h2_max: float
    step: float

    def axis(self, lo, hi) -> np.ndarray:
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if hi < lo:
            return np.zeros(0)
        n = int(math.floor((hi - lo) / self.step + 1e-9)) + 1
        return np.round(lo + self.step * np.arange(n), 12)

    @property
    def h1(self) -> np.ndarray:
        return self.axis(self.h1_min, self.h1_max)

    @property
    def h2(self) -> np.ndarray:
        return self.axis(self.h2_min, self.h2_max)

    @classmethod
    def square(cls, half_width: float, step: float) -> "GridSpec":
        return cls(-half_width, half_width, -half_width, half_width, step)


@dataclass
class PhaseDiagram:
    """Ground sector over a field grid; ``two_M`` is meaningless where
    ``boundary`` is set (several sectors tied within tolerance)."""
    h1: np.ndarray
    h2: np.ndarray
    two_M: np.ndarray          # (len(h1), len(h2)) int
    energy: np.ndarray         # (len(h1), len(h2))
    boundary: np.ndarray       # (len(h1), len(h2)) bool
    labels: list               # sector labels, axis 2 of sector_energy
    sector_energy: np.ndarray  # (len(h1), len(h2), len(labels))
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.two_M.shape

    def plateaus(self) -> set[int]:
        return {int(m) for m in np.unique(self.two_M[~self.boundary])}

    def distance_to_plateau(self, point, two_M: int) -> float:
        """Euclidean distance from ``point`` to the nearest cell of plateau ``two_M``."""
        mask = (self.two_M == two_M) & ~self.boundary
        if not mask.any():
            return math.inf
        g1, g2 = np.meshgrid(self.h1, self.h2, indexing="ij")
        d = np.hypot(g1[mask] - point[0], g2[mask] - point[1])
        return float(d.min())

    def rows(self):
        for i, x in enumerate(self.h1):
            for j, y in enumerate(self.h2):
                b = bool(self.boundary[i, j])
                yield float(x), float(y), None if b else int(self.two_M[i, j]), \
                    float(self.energy[i, j]), b

    def transitions(self, two_M_from: int, two_M_to: int):
        """Midpoints between grid neighbours (along either axis) whose labels
        are ``two_M_from`` and ``two_M_to``."""
        lab = np.where(self.boundary, 10 ** 6, self.two_M)
        out = []
        for axis in (0, 1):
            a = lab[:-1, :] if axis == 0 else lab[:, :-1]
            b = lab[1:, :] if axis == 0 else lab[:, 1:]
            hit = ((a == two_M_from) & (b == two_M_to)) | ((a == two_M_to) & (b == two_M_from))
            for i, j in zip(*np.nonzero(hit)):
                if axis == 0:
                    out.append((0.5 * (self.h1[i] + self.h1[i + 1]), float(self.h2[j])))
                else:
                    out.append((float(self.h1[i]), 0.5 * (self.h2[j] + self.h2[j + 1])))
        return out


def _sector_minima(system: SectorSystem, fields, labels, dense_max) -> np.ndarray:
    out = np.empty(len(labels))
    for k, two_M in enumerate(labels):
        w, _ = lowest_eigenpairs(system.block(two_M, fields).matrix, 1, dense_max,
                                 vectors=False)
        out[k] = w[0]
    return out


def _delta_task(args):
    graph, pattern, deltas, dense_max = args
    system = SectorSystem(graph, None)
    labels = system.labels
    a = np.asarray(pattern.a)
    c = np.asarray(pattern.c)
    return [_sector_minima(system, a * d + c, labels, dense_max) for d in deltas]


def _point_task(args):
    graph, pattern, points, dense_max = args
    system = SectorSystem(graph, None)
    labels = system.labels
    return [_sector_minima(system, pattern.fields(x, y), labels, dense_max) for x, y in points]


def _run(task, graph, pattern, items, dense_max, workers):
    """Evaluate ``task`` over ``items`` in contiguous chunks; results keep the
    input order whatever the worker count."""
    if not items:
        return []
    if workers is None or workers <= 1:
        return task((graph, pattern, items, dense_max))
    n_chunks = min(len(items), 4 * workers)
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    chunks = [items[bounds[k]:bounds[k + 1]] for k in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(task, [(graph, pattern, ch, dense_max) for ch in chunks])
        return [r for part in parts for r in part]


def _label(e_vec, labels):
    emin = float(e_vec.min())
    tol = degeneracy_tol(emin)
    tied = np.nonzero(e_vec <= emin + tol)[0]
    return emin, int(labels[tied[0]]), len(tied) > 1


def scan_diagram(graph: SpinGraph, pattern, grid: GridSpec, *, workers: int | None = None,
                 dense_max: int = SCAN_DENSE_MAX, use_lines: bool | None = None) -> PhaseDiagram:
    """Ground magnetization of ``graph`` over ``grid`` for the given field pattern.

    ``use_lines`` selects the one-solve-per-``h1 - h2`` path; by default it is
    used whenever the pattern allows it.  Both paths give the same labels.
    """
    pattern = make_pattern(graph, pattern)
    h1 = grid.h1
    h2 = grid.h2
    labels = SectorSystem(graph, None).labels
    lab_arr = np.asarray(labels, dtype=float)
    kappa = pattern.kappa
    if use_lines is None:
        use_lines = kappa is not None
    if use_lines and kappa is None:
        raise ValueError("line decomposition needs a_i + b_i constant over sites")
    n1, n2 = len(h1), len(h2)
    sec = np.empty((n1, n2, len(labels)))
    if n1 and n2:
        if use_lines:
            dgrid = np.round(h1[:, None] - h2[None, :], 10)
            deltas, inverse = np.unique(dgrid, return_inverse=True)
            base = _run(_delta_task, graph, pattern, [float(d) for d in deltas],
                        dense_max, workers)
            base = np.asarray(base)[inverse.reshape(n1, n2)]
            sec = base - kappa * h2[None, :, None] * lab_arr[None, None, :] / 2
        else:
            pts = [(float(x), float(y)) for x in h1 for y in h2]
            sec = np.asarray(_run(_point_task, graph, pattern, pts, dense_max,
                                  workers)).reshape(n1, n2, len(labels))
    two_M = np.zeros((n1, n2), dtype=int)
    energy = np.zeros((n1, n2))
    boundary = np.zeros((n1, n2), dtype=bool)
    for i in range(n1):
        for j in range(n2):
            energy[i, j], two_M[i, j], boundary[i, j] = _label(sec[i, j], labels)
    meta = {
        "graph": graph.to_dict(),
        "pattern": pattern.to_dict(),
        "grid": {"h1_min": grid.h1_min, "h1_max": grid.h1_max, "h2_min": grid.h2_min,
                 "h2_max": grid.h2_max, "step": grid.step},
        "deltas": sorted({float(d) for d in graph.deltas()}),
        "tolerance": "1e-8*max(1,|E|)",
    }
    return PhaseDiagram(h1, h2, two_M, energy, boundary, labels, sec, meta)


# ---------------------------------------------------------------------------
# exact transitions along h1 - h2 = const

@dataclass
class LineSpectrum:
    """Sector minima along ``h1 = h2 + delta``: ``E_M(h2) = e_M - kappa h2 M``."""
    delta: float
    kappa: float
    labels: list
    offsets: np.ndarray

    def energies(self, h2) -> np.ndarray:
        lab = np.asarray(self.labels, dtype=float) / 2
        return self.offsets[None, :] - self.kappa * np.atleast_1d(h2)[:, None] * lab[None, :]

    def ground_sequence(self, h2_min: float = -1e6, h2_max: float = 1e6):
        """Lower envelope in increasing h2: list of ``(2M, h2_start, h2_end)``."""
        lab = np.asarray(self.labels, dtype=float) / 2
        slope = -self.kappa * lab
        x = h2_min
        seq = []
        while x < h2_max:
            e = self.offsets + slope * x
            emin = e.min()
            tol = degeneracy_tol(emin)
            tied = np.nonzero(e <= emin + tol)[0]
            # among ties take the line that stays lowest to the right
            cur = tied[np.argmin(slope[tied])]
            nxt_x = h2_max
            nxt = None
            for k in range(len(lab)):
                if slope[k] < slope[cur] - 1e-15:
                    xc = (self.offsets[k] - self.offsets[cur]) / (slope[cur] - slope[k])
                    if x < xc < nxt_x or (xc == nxt_x and nxt is not None and slope[k] < slope[nxt]):
                        nxt_x, nxt = xc, k
            seq.append((int(self.labels[cur]), float(x), float(nxt_x)))
            if nxt is None:
                break
            x = nxt_x
        return seq


def line_spectrum(graph: SpinGraph, pattern, delta: float,
                  system: SectorSystem | None = None,
                  dense_max: int = SCAN_DENSE_MAX) -> LineSpectrum:
    pattern = make_pattern(graph, pattern)
    kappa = pattern.kappa
    if kappa is None:
        raise ValueError("line decomposition needs a_i + b_i constant over sites")
    system = system or SectorSystem(graph, None)
    off = _sector_minima(system, np.asarray(pattern.a) * delta + np.asarray(pattern.c),
                         system.labels, dense_max)
    return LineSpectrum(float(delta), kappa, list(system.labels), off)


# ---------------------------------------------------------------------------
# negativity scans

@dataclass
class NegativityRecord:
    h1: float
    h2: float
    two_M: int | None          # None: degenerate ground level, no state picked
    energy: float
    values: dict               # (i, j) -> negativity, empty at boundaries
    selected: bool = False     # sector imposed by the caller

    def to_dict(self) -> dict:
        return {"h1": self.h1, "h2": self.h2, "M2": self.two_M, "E": self.energy,
                "boundary": self.two_M is None, "selected_sector": self.selected,
                "negativity": {f"{i}-{j}": v for (i, j), v in self.values.items()}}


def scan_negativity(graph: SpinGraph, pattern, pairs, points, *, M=None,
                    system: SectorSystem | None = None,
                    dense_max: int = 1024) -> list[NegativityRecord]:
    """Pair negativities in the ground state at each ``(h1, h2)`` point.

    Without ``M`` the state is the unique global ground state; points where
    several sectors tie are returned as boundary records without values.
    With ``M`` the lowest state of that sector is used at every point.
    """
    pattern = make_pattern(graph, pattern)
    system = system or SectorSystem(graph, None)
    pairs = [tuple(int(x) for x in p) for p in pairs]
    labels = system.labels
    forced = None if M is None else int(round(2 * float(M)))
    out = []
    for h1, h2 in points:
        h = pattern.fields(h1, h2)
        if forced is None:
            e_vec = _sector_minima(system, h, labels, SCAN_DENSE_MAX)
            emin, two_M, tie = _label(e_vec, labels)
            if tie:
                out.append(NegativityRecord(float(h1), float(h2), None, emin, {}))
                continue
        else:
            two_M = forced
        block = system.block(two_M, h)
        w, v = lowest_eigenpairs(block.matrix, min(2, block.dim), dense_max)
        if len(w) > 1 and abs(w[1] - w[0]) <= degeneracy_tol(w[0]):
            out.append(NegativityRecord(float(h1), float(h2), None, float(w[0]), {},
                                        forced is not None))
            continue
        vals = {p: negativity(partial_trace(v[:, 0], block.basis, p)).value for p in pairs}
        out.append(NegativityRecord(float(h1), float(h2), two_M, float(w[0]), vals,
                                    forced is not None))
    return out


# ---------------------------------------------------------------------------
# output

def _fmt(x: float, digits: int) -> str:
    s = f"{x:.{digits}f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def diagram_csv(diagram: PhaseDiagram) -> str:
    """CSV text with columns h1, h2, M2 (twice M; blank at boundaries), E,
    boundary_flag (0/1).  Fields 6 decimals, energies 10 decimals."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for x, y, m2, e, b in diagram.rows():
        w.writerow([_fmt(x, 6), _fmt(y, 6), "" if m2 is None else m2, _fmt(e, 10), int(b)])
    return buf.getvalue()


def diagram_json(diagram: PhaseDiagram) -> dict:
    return {
        "kind": "phase_diagram",
        "metadata": diagram.metadata,
        "columns": list(CSV_COLUMNS),
        "cells": [{"h1": round(x, 12), "h2": round(y, 12), "M2": m2,
                   "E": round(e, 10), "boundary_flag": b}
                  for x, y, m2, e, b in diagram.rows()],
    }


def negativity_csv(records) -> str:
    pairs = sorted({p for r in records for p in r.values}) if records else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h1", "h2", "M2", "E", "boundary_flag"] + [f"N_{i}_{j}" for i, j in pairs])
    for r in records:
        w.writerow([_fmt(r.h1, 6), _fmt(r.h2, 6), "" if r.two_M is None else r.two_M,
                    _fmt(r.energy, 10), int(r.two_M is None)]
                   + ["" if p not in r.values else _fmt(r.values[p], 12) for p in pairs])
    return buf.getvalue()


def negativity_json(records, metadata=None) -> dict:
    return {"kind": "negativity", "metadata": metadata or {},
            "records": [r.to_dict() for r in records]}


def load_schema(name: str) -> dict:
    text = resources.files("xxzfact").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def emit(obj, path=None, fmt: str = "csv", metadata=None) -> str:
    """Serialize a diagram or a list of negativity records as CSV or JSON.

    Returns the text; also writes it to ``path`` when given.  JSON output is
    validated against the shipped schema before it is written.
    """
    import jsonschema

    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    if isinstance(obj, PhaseDiagram):
        if fmt == "csv":
            text = diagram_csv(obj)
        else:
            doc = diagram_json(obj)
            jsonschema.validate(doc, load_schema("diagram"))
            text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:
        records = list(obj)
        if fmt == "csv":
            text = negativity_csv(records)
        else:
            doc = negativity_json(records, metadata)
            jsonschema.validate(doc, load_schema("negativity"))
            text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
