"""Factorized (completely separable) eigenstates of XXZ arrays.

For every coupled pair the tan-half-angles of the local alignment directions
are related by ``tan(theta_j/2) = eta_ij * tan(theta_i/2)`` with
``eta_ij = Delta_ij + nu_ij * sqrt(Delta_ij**2 - 1)``.  A choice of branch
``nu_ij = +-1`` on every edge (a :class:`SignAssignment`) fixes the state up to
the seed angle, and fixes the factorizing fields independently of it.

It is convenient to work with the site potential ``p_i = log|t_i / t_0|``
(``t_i = tan(theta_i/2)``), which adds ``nu_ij * log|eta_+(Delta_ij)|`` along
every edge. A sign assignment is loop consistent iff this potential (and the
sign of ``t_i``) is single valued on the graph.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lattice import LatticeError, SpinGraph

ANGLE_TOL = 1e-12
_POT_TOL = 1e-9


class FactorizationError(ValueError):
    pass


class InfeasibleAnisotropyError(FactorizationError):
    """Raised when |Delta| < 1 on an edge: no real nontrivial solution."""


class LoopInconsistencyError(FactorizationError):
    def __init__(self, message, edges=(), cycle=()):
        super().__init__(message)
        self.edges = tuple(edges)
        self.cycle = tuple(cycle)


class ExtremalityError(FactorizationError):
    pass


@dataclass(frozen=True)
class SignAssignment:
    """Branch choice per edge, ``nu[e] = nu_ij`` for edge ``e = (i, j)``, i < j.

    The reversed orientation carries the opposite sign, ``nu_ji = -nu_ij``.
    """
    nu: tuple[int, ...]

    def __post_init__(self):
        if any(v not in (1, -1) for v in self.nu):
            raise FactorizationError(f"signs must be +-1, got {self.nu}")

    def of(self, graph: SpinGraph, i: int, j: int) -> int:
        v = self.nu[graph.edge_id(i, j)]
        return v if i < j else -v

    def flipped(self) -> "SignAssignment":
        return SignAssignment(tuple(-v for v in self.nu))

    def as_array(self) -> np.ndarray:
        return np.array(self.nu, dtype=np.int64)


@dataclass(frozen=True)
class AngleConfig:
    """Polar angles of the local alignment directions (azimuths all zero).

    For Delta < 0 the ratio eta is negative and the corresponding theta is
    returned in (-pi, 0): a negative polar angle stands for the direction
    rotated by pi about z (phi = pi, polar angle |theta|).
    """
    theta: np.ndarray
    phi: np.ndarray


@dataclass(frozen=True)
class FactorizedSolution:
    signs: SignAssignment
    angles: AngleConfig
    fields: np.ndarray
    energy: float


# ---------------------------------------------------------------------------
# single-edge relations

def eta_ratio(delta: float, sign: int) -> float:
    """Tan-half-angle ratio ``Delta + sign * sqrt(Delta**2 - 1)``."""
    if sign not in (1, -1):
        raise FactorizationError(f"sign must be +-1, got {sign!r}")
    if not math.isfinite(delta):
        raise InfeasibleAnisotropyError("infinite anisotropy (J = 0) has no finite ratio")
    if abs(delta) < 1.0 - ANGLE_TOL:
        raise InfeasibleAnisotropyError(
            f"|Delta| = {abs(delta):.6g} < 1: no real nontrivial factorized solution")
    root = math.sqrt(max(delta * delta - 1.0, 0.0))
    return delta + sign * root


def _edge_log_eta(graph: SpinGraph) -> np.ndarray:
    """log|eta_+| per edge: >= 0 for Delta >= 1, <= 0 for Delta <= -1."""
    out = np.empty(len(graph.edges))
    for k, e in enumerate(graph.edges):
        out[k] = math.log(abs(eta_ratio(e.delta, 1)))
    return out


def _edge_field_strength(graph: SpinGraph) -> np.ndarray:
    """``J * sqrt(Delta**2 - 1) = sign(J) * sqrt(Jz**2 - J**2)`` per edge."""
    out = np.empty(len(graph.edges))
    for k, e in enumerate(graph.edges):
        if e.j_xy == 0:
            raise InfeasibleAnisotropyError(f"edge ({e.i},{e.j}) has J = 0")
        d2 = e.j_z * e.j_z - e.j_xy * e.j_xy
        if d2 < -ANGLE_TOL * e.j_xy * e.j_xy:
            raise InfeasibleAnisotropyError(
                f"edge ({e.i},{e.j}): |Delta| = {abs(e.delta):.6g} < 1")
        out[k] = math.copysign(math.sqrt(max(d2, 0.0)), e.j_xy)
    return out


# ---------------------------------------------------------------------------
# potentials and loop consistency

def _tree_order(graph: SpinGraph):
    """Deterministic DFS (lowest index first) over every component.

    Returns ``(order, parent, parent_edge)``; roots have parent -1.
    """
    adj = graph.neighbors()
    n = graph.n_sites
    parent = [-1] * n
    parent_edge = [-1] * n
    seen = [False] * n
    order = []
    for root in range(n):
        if seen[root]:
            continue
        stack = [root]
        while stack:
            u = stack.pop()
            if seen[u]:
                continue
            seen[u] = True
            order.append(u)
            for v in reversed(adj[u]):
                if not seen[v]:
                    parent[v] = u
                    parent_edge[v] = graph.edge_id(u, v)
                    stack.append(v)
    return order, parent, parent_edge


def _tree_cycle(parent, u, v):
    """Sites of the cycle closed by the non-tree edge (u, v)."""
    def path_to_root(x):
        p = [x]
        while parent[x] != -1:
            x = parent[x]
            p.append(x)
        return p
    pu, pv = path_to_root(u), path_to_root(v)
    anc = set(pv)
    lca = next(x for x in pu if x in anc)
    left = pu[:pu.index(lca) + 1]
    right = pv[:pv.index(lca)]
    return tuple(left + right[::-1])


def site_potentials(graph: SpinGraph, signs: SignAssignment):
    """Potentials ``p_i = log|t_i/t_root|`` and signs of ``t_i/t_root``.

    Raises :class:`LoopInconsistencyError` naming every non-tree edge whose
    cycle does not close.
    """
    if len(signs.nu) != len(graph.edges):
        raise FactorizationError("sign assignment does not match the edge list")
    ell = _edge_log_eta(graph)
    order, parent, parent_edge = _tree_order(graph)
    pot = np.zeros(graph.n_sites)
    sgn = np.ones(graph.n_sites, dtype=np.int64)
    for v in order:
        u = parent[v]
        if u == -1:
            continue
        e = parent_edge[v]
        nu = signs.of(graph, u, v)
        pot[v] = pot[u] + nu * ell[e]
        sgn[v] = sgn[u] * (1 if graph.edges[e].delta > 0 else -1)
    tree = set(pe for pe in parent_edge if pe >= 0)
    bad, cycles = [], []
    for k, e in enumerate(graph.edges):
        if k in tree:
            continue
        expected = pot[e.i] + signs.nu[k] * ell[k]
        same_sign = sgn[e.j] == sgn[e.i] * (1 if e.delta > 0 else -1)
        if abs(expected - pot[e.j]) > _POT_TOL * max(1.0, abs(ell[k])) or not same_sign:
            bad.append(k)
            cycles.append(_tree_cycle(parent, e.i, e.j))
    if bad:
        names = ", ".join(f"#{k}({graph.edges[k].i},{graph.edges[k].j})" for k in bad)
        raise LoopInconsistencyError(
            f"sign assignment is not loop consistent; violating edges {names}; "
            f"first cycle {cycles[0]}", edges=bad, cycle=cycles[0])
    return pot, sgn


def check_loop_consistency(graph: SpinGraph, signs: SignAssignment) -> None:
    site_potentials(graph, signs)


def is_loop_consistent(graph: SpinGraph, signs: SignAssignment) -> bool:
    try:
        site_potentials(graph, signs)
    except LoopInconsistencyError:
        return False
    return True


# ---------------------------------------------------------------------------
# angles, fields, energy

def propagate_angles(graph: SpinGraph, signs: SignAssignment,
                     seed_theta: float = math.pi / 2) -> AngleConfig:
    """Polar angles obtained by applying the tan-half-angle relation along a
    spanning traversal from site 0 (and from the lowest site of any further
    component), then re-checked on every edge."""
    if not (0.0 < seed_theta < math.pi):
        raise FactorizationError(f"seed angle must lie in (0, pi), got {seed_theta}")
    site_potentials(graph, signs)
    order, parent, parent_edge = _tree_order(graph)
    t = np.empty(graph.n_sites)
    for v in order:
        u = parent[v]
        if u == -1:
            t[v] = math.tan(seed_theta / 2)
            continue
        e = graph.edges[parent_edge[v]]
        t[v] = eta_ratio(e.delta, signs.of(graph, u, v)) * t[u]
    theta = 2.0 * np.arctan(t)
    assert np.all(np.abs(theta) < math.pi) and np.all(theta != 0.0)
    for k, e in enumerate(graph.edges):
        eta = eta_ratio(e.delta, signs.nu[k])
        ratio = math.tan(theta[e.j] / 2) / math.tan(theta[e.i] / 2)
        if abs(ratio - eta) > 1e-10 * max(1.0, abs(eta)):
            raise LoopInconsistencyError(
                f"angle relation fails on edge ({e.i},{e.j}): {ratio} != {eta}", edges=[k])
    return AngleConfig(theta=theta, phi=np.zeros(graph.n_sites))


def factorizing_fields(graph: SpinGraph, signs: SignAssignment) -> np.ndarray:
    """Longitudinal fields ``h_i = sum_j s_j nu_ij J_ij sqrt(Delta_ij**2 - 1)``."""
    if len(signs.nu) != len(graph.edges):
        raise FactorizationError("sign assignment does not match the edge list")
    strength = _edge_field_strength(graph)
    spins = graph.spins
    h = np.zeros(graph.n_sites)
    for k, e in enumerate(graph.edges):
        w = signs.nu[k] * strength[k]
        h[e.i] += spins[e.j] * w
        h[e.j] -= spins[e.i] * w
    return h


def separable_energy(graph: SpinGraph) -> float:
    """Energy of any factorized eigenstate, ``-sum_edges s_i s_j Jz_ij``."""
    spins = graph.spins
    return -float(sum(spins[e.i] * spins[e.j] * e.j_z for e in graph.edges))


def factorize(graph: SpinGraph, signs: SignAssignment,
              seed_theta: float = math.pi / 2) -> FactorizedSolution:
    angles = propagate_angles(graph, signs, seed_theta)
    return FactorizedSolution(signs=signs, angles=angles,
                              fields=factorizing_fields(graph, signs),
                              energy=separable_energy(graph))


def product_state_amplitudes(graph: SpinGraph, angles: AngleConfig) -> np.ndarray:
    """Full-space vector of the product state in lexicographic basis order.

    Local amplitudes ``sqrt(C(2s, s-m)) sin^(s-m)(theta/2) cos^(s+m)(theta/2)``
    with ``m`` ascending; a negative theta flips the sign of odd powers of the
    sine, which is the pi rotation about z.
    """
    vec = np.ones(1)
    for site, th in zip(graph.sites, angles.theta):
        two_s = site.two_s
        local = np.empty(two_s + 1)
        for u in range(two_s + 1):
            k = two_s - u                      # s - m
            local[u] = (math.sqrt(math.comb(two_s, k))
                        * math.sin(th / 2) ** k * math.cos(th / 2) ** (two_s - k))
        vec = np.kron(vec, local)
    return vec


# ---------------------------------------------------------------------------
# named assignments

def signs_from_steps(graph: SpinGraph, steps) -> SignAssignment:
    """Assignment with ``nu_ij = k_j - k_i`` for an integer step function ``k``.

    ``k_i`` counts branch steps from the seed; adjacent sites must differ by 1.
    """
    steps = [int(x) for x in steps]
    nu = []
    for e in graph.edges:
        d = steps[e.j] - steps[e.i]
        if d not in (1, -1):
            raise FactorizationError(
                f"step function must change by 1 across edge ({e.i},{e.j}), got {d}")
        nu.append(d)
    return SignAssignment(tuple(nu))


def alternating_signs(graph: SpinGraph) -> SignAssignment:
    """Neel-type assignment: steps alternate 0, 1 on a bipartite graph."""
    colour = [-1] * graph.n_sites
    adj = graph.neighbors()
    for root in range(graph.n_sites):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in adj[u]:
                if colour[v] < 0:
                    colour[v] = 1 - colour[u]
                    queue.append(v)
                elif colour[v] == colour[u]:
                    raise FactorizationError("graph is not bipartite")
    return signs_from_steps(graph, colour)


def zero_bulk_signs(graph: SpinGraph) -> SignAssignment:
    """Monotone assignment with zero factorizing field on all bulk sites.

    Open chains and rectangles use ``k = row + col``; a cyclic chain climbs to
    the opposite site and back, ``k_i = min(i, N - i)`` (N even).
    """
    n = graph.n_sites
    if graph.geometry == "open_chain":
        return signs_from_steps(graph, range(n))
    if graph.geometry == "rectangular":
        cols = graph.shape[1]
        return signs_from_steps(graph, [sum(divmod(i, cols)) for i in range(n)])
    if graph.geometry == "cyclic_chain":
        if n % 2:
            raise FactorizationError("cyclic chains need even N")
        return signs_from_steps(graph, [min(i, n - i) for i in range(n)])
    raise FactorizationError(f"no zero-bulk rule for geometry {graph.geometry!r}")


def next_alternating_signs(graph: SpinGraph) -> SignAssignment:
    """Steps 0, 1, 2, 1, 0, ... giving fields (2, 0, -2, 0, ...) h_s on a cyclic
    chain with N divisible by 4."""
    n = graph.n_sites
    if graph.geometry not in ("open_chain", "cyclic_chain"):
        raise FactorizationError("next-alternating assignment is defined for chains")
    if graph.geometry == "cyclic_chain" and n % 4:
        raise FactorizationError("cyclic next-alternating assignment needs N % 4 == 0")
    return signs_from_steps(graph, [(0, 1, 2, 1)[i % 4] for i in range(n)])


def named_signs(graph: SpinGraph, name: str) -> SignAssignment:
    table = {
        "alternating": alternating_signs,
        "zero_bulk": zero_bulk_signs,
        "next_alternating": next_alternating_signs,
    }
    if name not in table:
        raise FactorizationError(f"unknown sign pattern {name!r}")
    return table[name](graph)


# ---------------------------------------------------------------------------
# enumeration and counting

def enumerate_sign_assignments(graph: SpinGraph) -> Iterator[SignAssignment]:
    """Lazily yield every loop-consistent assignment exactly once.

    Sites are placed in DFS order; each new site has two choices on its tree
    edge (one when |Delta| = 1, where both branches coincide and nu = +1 is
    the canonical representative), and every edge back to an already placed
    site must then close.
    """
    ell = _edge_log_eta(graph)
    order, parent, parent_edge = _tree_order(graph)
    n = graph.n_sites
    position = {v: k for k, v in enumerate(order)}
    # edges from each site to sites placed earlier, excluding the tree edge
    back = [[] for _ in range(n)]
    for k, e in enumerate(graph.edges):
        a, b = (e.i, e.j) if position[e.i] < position[e.j] else (e.j, e.i)
        if parent_edge[b] != k:
            back[b].append((k, a))
    pos_sign = [graph.edges[k].delta > 0 for k in range(len(graph.edges))]
    pot = np.zeros(n)
    sgn = np.ones(n, dtype=np.int64)
    nu = [0] * len(graph.edges)
    found = 0

    def orient(k, u, v, value):
        # store nu_uv for the (i<j) orientation
        nu[k] = value if u < v else -value

    def place(depth):
        nonlocal found
        if depth == n:
            found += 1
            yield SignAssignment(tuple(nu))
            return
        v = order[depth]
        u = parent[v]
        if u == -1:
            pot[v], sgn[v] = 0.0, 1
            choices = [None]
        else:
            k = parent_edge[v]
            choices = [1] if abs(ell[k]) < _POT_TOL else [1, -1]
        for c in choices:
            if c is not None:
                k = parent_edge[v]
                pot[v] = pot[u] + c * ell[k]
                sgn[v] = sgn[u] * (1 if pos_sign[k] else -1)
                orient(k, u, v, c)
            ok = True
            for k, a in back[v]:
                if sgn[v] != sgn[a] * (1 if pos_sign[k] else -1):
                    ok = False
                    break
                diff = pot[v] - pot[a]
                tol = _POT_TOL * max(1.0, abs(ell[k]))
                if abs(ell[k]) < _POT_TOL:
                    if abs(diff) > tol:
                        ok = False
                        break
                    orient(k, a, v, 1)
                elif abs(diff - ell[k]) <= tol:
                    orient(k, a, v, 1)
                elif abs(diff + ell[k]) <= tol:
                    orient(k, a, v, -1)
                else:
                    ok = False
                    break
            if ok:
                yield from place(depth + 1)

    yield from place(0)
    if found == 0:
        warnings.warn(f"no loop-consistent sign assignment exists on this "
                      f"{graph.geometry} graph (N={n})", RuntimeWarning, stacklevel=2)


def step_counts(graph: SpinGraph, signs: SignAssignment) -> np.ndarray:
    """Integer step function ``k_i`` (seed at site 0 has k = 0).

    Requires a single |Delta| > 1 on all edges.
    """
    ell = np.abs(_edge_log_eta(graph))
    if ell.size == 0 or ell.min() < _POT_TOL or ell.max() - ell.min() > _POT_TOL * ell.max():
        raise FactorizationError("step counts need a constant |Delta| > 1")
    pot, _ = site_potentials(graph, signs)
    ref = _edge_log_eta(graph)[0]
    k = pot / ref
    steps = np.rint(k).astype(np.int64)
    if np.max(np.abs(k - steps)) > 1e-6:
        raise FactorizationError("potential is not an integer multiple of the edge step")
    return steps


def terrace_map(graph: SpinGraph, signs: SignAssignment) -> np.ndarray:
    """Rows x cols integer array ``(r + c - k)/2`` of a rectangular configuration.

    Entries are nondecreasing along rows and columns and adjacent entries
    differ by at most one.
    """
    if graph.geometry != "rectangular" or graph.shape is None:
        raise LatticeError("terrace map needs a rectangular graph")
    rows, cols = graph.shape
    k = step_counts(graph, signs)
    out = np.empty((rows, cols), dtype=np.int64)
    for idx in range(graph.n_sites):
        r, c = divmod(idx, cols)
        twice = r + c - int(k[idx])
        if twice % 2:
            raise FactorizationError("step parity mismatch")
        out[r, c] = twice // 2
    return out


def _transfer_matrix(rows: int) -> list[list[int]]:
    a = [[1]]
    for _ in range(rows - 1):
        m = len(a)
        at = [[a[j][i] for j in range(m)] for i in range(m)]
        top = [a[i] + at[i] for i in range(m)]
        bottom = [[0] * m + a[i] for i in range(m)]
        a = top + bottom
    m = len(a)
    return [[a[i][j] + a[j][i] for j in range(m)] for i in range(m)]


def count_configurations(rows: int, cols: int) -> int:
    """Number of factorized configurations of an open rows x cols array for a
    fixed seed: the sum of all entries of ``B(rows)**(cols - 1)``, in exact
    integer arithmetic."""
    if rows < 1 or cols < 1:
        raise LatticeError("rows and cols must be >= 1")
    b = _transfer_matrix(rows)
    m = len(b)
    vec = [1] * m
    for _ in range(cols - 1):
        vec = [sum(b[i][j] * vec[j] for j in range(m) if b[i][j]) for i in range(m)]
    return sum(vec)


def count_three_row_closed_form(cols: int) -> int:
    """Closed form for the 3 x N count, ``a+ l+^N + a- l-^N`` rounded."""
    r17 = math.sqrt(17.0)
    lp, lm = (5 + r17) / 2, (5 - r17) / 2
    ap, am = (1 + 3 / r17) / 2, (1 - 3 / r17) / 2
    return int(round(ap * lp ** cols + am * lm ** cols))


# ---------------------------------------------------------------------------
# extremality

@dataclass(frozen=True)
class ExtremalReport:
    kind: str            # "lowest", "highest" or "none"
    energy: float
    reference: float | None
    deviation: float | None


def verify_extremal(graph: SpinGraph, solution: FactorizedSolution, spectrum,
                    rtol: float = 1e-10) -> ExtremalReport:
    """Check that the separable energy is the lowest (all Jz > 0) or highest
    (all Jz < 0) eigenvalue of a spectrum computed at the factorizing fields.

    ``spectrum`` is either an array of eigenvalues or an object with
    ``min_energy``/``max_energy`` attributes.
    """
    jz = np.array([e.j_z for e in graph.edges])
    if np.all(jz > 0):
        kind = "lowest"
    elif np.all(jz < 0):
        kind = "highest"
    else:
        return ExtremalReport("none", solution.energy, None, None)
    if hasattr(spectrum, "min_energy"):
        ref = spectrum.min_energy if kind == "lowest" else spectrum.max_energy
    else:
        vals = np.asarray(spectrum, dtype=float)
        ref = float(vals.min() if kind == "lowest" else vals.max())
    if ref is None:
        raise ExtremalityError(f"spectrum does not provide the {kind} eigenvalue")
    dev = abs(ref - solution.energy)
    if dev > rtol * max(1.0, abs(solution.energy)):
        raise ExtremalityError(
            f"separable energy {solution.energy:.15g} is not the {kind} eigenvalue "
            f"({ref:.15g}, deviation {dev:.3g}); check the sign assignment and "
            f"its loop consistency")
    return ExtremalReport(kind, solution.energy, ref, dev)
