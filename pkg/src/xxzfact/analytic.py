"""Closed-form results at and around factorization.

Definite-magnetization projections of factorized states, their pair
reductions for alternating configurations, the border of the aligned phase,
the one-magnon (W-like) states of an alternating cyclic chain and the
two-sublattice mean-field solution.  Everything large is assembled in log
space so that spins up to s = 4 on N = 8 sites stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .entanglement import PairDensityMatrix, concurrence, negativity
from .exact.basis import SectorBasis, sector_basis, to_two
from .factorization import (FactorizationError, SignAssignment, _tree_order, eta_ratio,
                            site_potentials)
from .lattice import LatticeError, SpinGraph, build_chain, twice_spin

PAIR_CLASSES = ("oe", "oo", "ee")


# ---------------------------------------------------------------------------
# binomials and the normalization polynomials

def log_binom(n, k):
    """``log C(n, k)`` elementwise; ``-inf`` outside ``0 <= k <= n``."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    valid = (k >= -1e-9) & (k <= n + 1e-9) & (n >= -1e-9)
    with np.errstate(invalid="ignore"):
        val = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return np.where(valid, val, -np.inf)


def _spin(spin) -> float:
    return twice_spin(spin) / 2


def _as_index(x, what):
    v = float(x)
    if abs(v - round(v)) > 1e-9:
        raise FactorizationError(f"{what} = {x!r} must be an integer")
    return int(round(v))


@dataclass(frozen=True)
class JacobiNormalization:
    """``Q_n^{m,k}(eta) = (eta^2-1)^n P_n^{(m-k, m+k)}((eta^2+1)/(eta^2-1))``
    held as its logarithm (the value is a sum of positive terms)."""
    n: int
    m: float
    k: float
    eta: float
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _log_q(n, m, k, log_eta2):
    j = np.arange(n + 1)
    terms = (log_binom(n + m - k, n - j) + log_binom(n + m + k, j)
             + (n - j) * log_eta2)
    if np.all(np.isneginf(terms)):
        return -np.inf
    return float(logsumexp(terms))


def jacobi_Q(n, m, k, eta) -> JacobiNormalization:
    """Normalization polynomial by direct summation with max-term rescaling,

        Q_n^{m,k}(eta) = sum_j C(n+m-k, n-j) C(n+m+k, j) eta^(2(n-j)),

    which is the expansion of the Jacobi form and is also valid at eta = 1.
    """
    n_int = _as_index(n, "n")
    if n_int < 0:
        raise FactorizationError(f"n must be >= 0, got {n}")
    for upper in (n_int + m - k, n_int + m + k):
        _as_index(upper, "upper binomial index")
    eta = float(eta)
    if not eta > 0:
        raise FactorizationError(f"eta must be positive, got {eta}")
    return JacobiNormalization(n_int, float(m), float(k), eta,
                               _log_q(n_int, float(m), float(k), 2.0 * math.log(eta)))


# ---------------------------------------------------------------------------
# projected states

@dataclass(frozen=True, eq=False)
class ProjectedState:
    """Normalized component of a factorized state with total magnetization M."""
    two_M: int
    basis: SectorBasis
    amplitudes: np.ndarray
    eta_chain: tuple[float, ...]

    @property
    def M(self) -> float:
        return self.two_M / 2


def _normalize_log(log_amp, sign):
    finite = np.isfinite(log_amp)
    if not finite.any():
        raise FactorizationError("projected state vanishes identically")
    shift = log_amp[finite].max()
    amp = np.where(finite, np.exp(log_amp - shift), 0.0) * sign
    return amp / np.linalg.norm(amp)


def projected_state(graph: SpinGraph, signs: SignAssignment, M, path=None) -> ProjectedState:
    """Sector-M component of the factorized state fixed by ``signs``.

    Amplitude of ``|m_1..m_N>`` is ``prod_i sqrt(C(2s_i, s_i-m_i)) t_i^(s_i-m_i)``
    with ``t_i = tan(theta_i/2)``; only ratios of the ``t_i`` matter, so the
    seed angle drops out.  By default the ratios come from the site potentials
    on a DFS tree.  ``path`` (a sequence visiting every site once) switches to
    the explicit chain-product form, with
    ``prod_i eta_{p_i p_{i+1}}^(sum_{j<=i} m_{p_j})`` along the path.
    """
    two_M = to_two(M)
    basis = sector_basis(graph, two_M)
    pot, sgn = site_potentials(graph, signs)
    m = basis.m
    two_s = graph.two_spins
    lb = log_binom(two_s[None, :].astype(float), (two_s[None, :] / 2.0 - m))
    log_amp = 0.5 * lb.sum(axis=1)
    if path is None:
        log_amp = log_amp - m @ pot
        order, _, _ = _tree_order(graph)
        chain = tuple(float(sgn[b] * sgn[a] * math.exp(pot[b] - pot[a]))
                      for a, b in zip(order[:-1], order[1:]))
    else:
        path = [int(p) for p in path]
        if sorted(path) != list(range(graph.n_sites)):
            raise FactorizationError("path must visit every site exactly once")
        cum = np.cumsum(m[:, path], axis=1)
        log_eta = np.array([pot[b] - pot[a] for a, b in zip(path[:-1], path[1:])])
        log_amp = log_amp + cum[:, :-1] @ log_eta
        chain = tuple(float(sgn[b] * sgn[a] * math.exp(pot[b] - pot[a]))
                      for a, b in zip(path[:-1], path[1:]))
    # t_i^(s_i - m_i) carries sign(t_i)^(s_i - m_i); s_i - m_i is an integer
    powers = np.rint(two_s[None, :] / 2.0 - m).astype(np.int64)
    negative = (sgn < 0)[None, :]
    sign = np.where(np.sum(powers * negative, axis=1) % 2 == 1, -1.0, 1.0)
    return ProjectedState(two_M, basis, _normalize_log(log_amp, sign), chain)


def pair_projected_state(spin, delta: float, sign: int, M) -> ProjectedState:
    """Schmidt form of the projected factorized state of a single spin-s pair,

        sum_m sqrt(C(2s,s-m) C(2s,s+m-M) / Q_{2s-M}^{M,0}(eta)) eta^(s+m-M) |m, M-m>.
    """
    graph = build_chain(2, spin, 1.0, delta)
    two_M = to_two(M)
    basis = sector_basis(graph, two_M)
    two_s = graph.two_spins[0]
    s = two_s / 2.0
    Mf = two_M / 2.0
    eta = eta_ratio(delta, sign)
    n = _as_index(2 * s - Mf, "2s - M")
    log_q = jacobi_Q(n, Mf, 0, abs(eta)).log_value
    m1 = basis.m[:, 0]
    expo = s + m1 - Mf
    log_amp = 0.5 * (log_binom(two_s, s - m1) + log_binom(two_s, expo) - log_q) \
        + expo * math.log(abs(eta))
    amp = np.exp(log_amp)
    if eta < 0:
        amp = amp * np.where(np.rint(expo).astype(int) % 2 == 1, -1.0, 1.0)
    return ProjectedState(two_M, basis, amp, (eta,))


# ---------------------------------------------------------------------------
# alternating pair reductions

def _pair_sites_of_class(pair_class):
    if pair_class not in PAIR_CLASSES:
        raise FactorizationError(f"pair class must be one of {PAIR_CLASSES}, got {pair_class!r}")


def reduced_pair_alternating(n_sites: int, spin, delta: float, pair_class: str, M,
                             sign: int = 1) -> PairDensityMatrix:
    """Reduced state of an odd-even, odd-odd or even-even pair in the sector-M
    projection of the alternating factorized state of N spins s.

    Odd sites are 1, 3, ... (0-based indices 0, 2, ...).  ``sign`` is the
    branch from an odd site to its even neighbours; the nonzero elements are

        eta^f sqrt(C_{m_j} C_{m'_j}) Q_{Ns-2s-M+m}^{M-m,(d+2l)s} / Q_{Ns-M}^{M,d s}

    with f = 2s - m_j - m'_j, 0, 4s - 2m and l = 0, -1, 1 for oe, oo, ee,
    d = N mod 2 and ``C_k = C(2s, s-k) C(2s, s-m+k)``.
    """
    _pair_sites_of_class(pair_class)
    try:
        two_s = twice_spin(spin)
    except LatticeError as exc:
        raise FactorizationError(str(exc)) from None
    s = two_s / 2.0
    N = int(n_sites)
    n_odd, n_even = (N + 1) // 2, N // 2
    need = {"oe": (1, 1), "oo": (2, 0), "ee": (0, 2)}[pair_class]
    if n_odd < need[0] or n_even < need[1]:
        raise FactorizationError(f"N = {N} has no {pair_class} pair")
    two_M = to_two(M)
    if abs(two_M) > N * two_s or (two_M - N * two_s) % 2:
        raise FactorizationError(f"M = {two_M}/2 out of range for N = {N}, s = {s}")
    Mf = two_M / 2.0
    delta_par = N % 2
    l = {"oe": 0, "oo": -1, "ee": 1}[pair_class]
    eta = eta_ratio(delta, sign)
    if eta <= 0:
        raise FactorizationError("closed form needs Delta >= 1")
    log_eta = math.log(eta)
    log_eta2 = 2.0 * log_eta
    Ns = N * s
    log_den = _log_q(_as_index(Ns - Mf, "Ns - M"), Mf, delta_par * s, log_eta2)
    d = two_s + 1
    rho = np.zeros((d * d, d * d))
    ms = np.arange(d) - s
    for a in range(d * d):
        mi, mj = ms[a // d], ms[a % d]
        m = mi + mj
        for b in range(d * d):
            mi2, mj2 = ms[b // d], ms[b % d]
            if abs(mi2 + mj2 - m) > 1e-9:
                continue
            n_rest = Ns - 2 * s - Mf + m
            if n_rest < -1e-9:
                continue
            log_c = 0.5 * (log_binom(two_s, s - mj) + log_binom(two_s, s - m + mj)
                           + log_binom(two_s, s - mj2) + log_binom(two_s, s - m + mj2))
            if not np.isfinite(log_c):
                continue
            log_num = _log_q(_as_index(n_rest, "rest index"), Mf - m,
                             (delta_par + 2 * l) * s, log_eta2)
            if not np.isfinite(log_num):
                continue
            f = {"oe": 2 * s - mj - mj2, "oo": 0.0, "ee": 4 * s - 2 * m}[pair_class]
            rho[a, b] = math.exp(f * log_eta + float(log_c) + log_num - log_den)
    return PairDensityMatrix(two_s, two_s, rho, "analytic_pair")


def alternating_pair_negativities(n_sites: int, spin, delta: float, M) -> dict[str, float]:
    """Negativities of the three distinct pair states at factorization."""
    return {c: negativity(reduced_pair_alternating(n_sites, spin, delta, c, M)).value
            for c in PAIR_CLASSES}


# ---------------------------------------------------------------------------
# border of the aligned phase

@dataclass(frozen=True)
class HyperbolaBranch:
    """``(h1/2sJ + b Delta)(h2/2sJ + b Delta) = 1`` for branch ``b = +-1``.

    The ``+`` branch borders M = +Ns, the ``-`` branch M = -Ns.  The physical
    part consists of the two arms beyond the factorizing fields.
    """
    spin: float
    J: float
    delta: float
    branch: int

    @property
    def scale(self) -> float:
        return 2 * self.spin * self.J

    @property
    def h_s(self) -> float:
        return self.spin * self.J * math.sqrt(max(self.delta ** 2 - 1, 0.0))

    def in_domain(self, h1: float) -> bool:
        x = h1 / self.scale
        b = self.branch
        return (b * x > -self.delta) and abs(h1) > 2 * self.h_s

    def domain(self):
        """Open h1 intervals of the two arms, as ``[(lo, hi), (lo, hi)]``."""
        a = 2 * self.h_s
        lim = self.delta * self.scale
        if self.branch == 1:
            return [(-lim, -a), (a, math.inf)]
        return [(-math.inf, -a), (a, lim)]

    def h2(self, h1):
        """h2 on the branch; raises outside the physical domain."""
        h1a = np.atleast_1d(np.asarray(h1, dtype=float))
        for v in h1a:
            if not self.in_domain(float(v)):
                raise ValueError(f"h1 = {v} outside the branch domain {self.domain()}")
        x = h1a / self.scale
        b = self.branch
        y = 1.0 / (x + b * self.delta) - b * self.delta
        out = y * self.scale
        return float(out[0]) if np.ndim(h1) == 0 else out

    def residual(self, h1, h2) -> float:
        b = self.branch
        return (h1 / self.scale + b * self.delta) * (h2 / self.scale + b * self.delta) - 1.0

    def crossings(self):
        """The two factorizing points h1 = -h2 = +-2 h_s (on both branches)."""
        a = 2 * self.h_s
        return [(a, -a), (-a, a)]

    def sample(self, h_max: float, n: int = 200):
        """Points of both arms with |h1|, |h2| <= h_max, ordered by h1."""
        pts = []
        for lo, hi in self.domain():
            lo_c = max(lo, -h_max)
            hi_c = min(hi, h_max)
            if lo_c >= hi_c:
                continue
            eps = 1e-9 * (hi_c - lo_c)
            for h1 in np.linspace(lo_c + eps, hi_c - eps, n):
                h2 = self.h2(float(h1))
                if abs(h2) <= h_max:
                    pts.append((float(h1), float(h2)))
        return pts


def boundary_hyperbola(spin, J: float, delta: float, branch: int) -> HyperbolaBranch:
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    return HyperbolaBranch(_spin(spin), float(J), float(delta), branch)


# ---------------------------------------------------------------------------
# one-magnon states of the alternating cyclic chain

@dataclass
class WStateData:
    """Lowest |M| = Ns - 1 state ``cos a |W_o> + sin a |W_e>`` and its pair data.

    ``sector = -1`` gives the mirrored M = -Ns + 1 state (fields reversed).
    """
    n_sites: int
    spin: float
    sector: int
    alpha: float
    lam: float
    energy_aligned: float
    energy_oneflip: float
    rho: dict
    negativities: dict
    concurrences: dict

    @property
    def cos_alpha(self) -> float:
        return math.cos(self.alpha)

    @property
    def sin_alpha(self) -> float:
        return math.sin(self.alpha)


def _w_pair_matrix(two_s, pair_class, cos2, sin2, N, sector):
    """Embed the 3 x 3 nonzero block into the full pair space."""
    d = two_s + 1
    top = d - 1 if sector == 1 else 0          # local digit of the aligned state
    nxt = top - 1 if sector == 1 else 1
    up_up = top * d + top
    up_dn = top * d + nxt                      # second site flipped
    dn_up = nxt * d + top                      # first site flipped
    sc = 2.0 * math.sqrt(cos2 * sin2)
    if pair_class == "oe":
        block = np.array([[1 - 2 / N, 0, 0],
                          [0, 2 / N * sin2, sc / N],
                          [0, sc / N, 2 / N * cos2]])
    else:
        c = cos2 if pair_class == "oo" else sin2
        block = np.array([[1 - 4 / N * c, 0, 0],
                          [0, 2 / N * c, 2 / N * c],
                          [0, 2 / N * c, 2 / N * c]])
    idx = [up_up, up_dn, dn_up]
    rho = np.zeros((d * d, d * d))
    rho[np.ix_(idx, idx)] = block
    return PairDensityMatrix(two_s, two_s, rho, "one_magnon")


def w_state_negativities(N: int, cos2: float) -> dict[str, float]:
    """Closed-form negativities of the W-like pair states.

    The odd-odd (even-even) value uses the squared coherence
    ``(2 cos^2 a / N)^2``, i.e. ``4 cos^4 a / N^2`` under the root.
    """
    sin2 = 1.0 - cos2
    a = 0.5 - 1.0 / N
    n_oe = math.sqrt(a * a + (4 * cos2 * sin2) / N ** 2) - a
    out = {"oe": n_oe}
    for cls, c in (("oo", cos2), ("ee", sin2)):
        b = 0.5 - 2 * c / N
        out[cls] = math.sqrt(b * b + 4 * c * c / N ** 2) - b
    return out


def w_state_package(n_sites: int, spin, J: float, Jz: float, h1: float, h2: float,
                    sector: int = 1) -> WStateData:
    """One-magnon ground state of a cyclic alternating-field chain (odd sites
    h1, even sites h2), its energy, pair states, negativities and concurrences.
    """
    N = int(n_sites)
    if N < 4 or N % 2:
        raise FactorizationError("the W-like construction needs a cyclic chain with even N >= 4")
    if sector not in (1, -1):
        raise ValueError("sector must be +1 (M = Ns-1) or -1 (M = -Ns+1)")
    s = _spin(spin)
    two_s = int(round(2 * s))
    if sector == -1:
        h1, h2 = -h1, -h2
    half = (h1 - h2) / 2.0
    lam = math.hypot(half, 2 * s * J)
    cos2 = (lam - half) / (2 * lam)
    sin2 = (lam + half) / (2 * lam)
    # sign of <W_o|H|W_e> = -2sJ fixes the relative sign of the two components
    alpha = math.atan2(math.copysign(math.sqrt(sin2), J), math.sqrt(cos2))
    e_ns = -N * s * ((h1 + h2) / 2 + s * Jz)
    e_ns1 = e_ns + (h1 + h2) / 2 + 2 * s * Jz - lam
    rho = {c: _w_pair_matrix(two_s, c, cos2, sin2, N, sector) for c in PAIR_CLASSES}
    negs = w_state_negativities(N, cos2)
    sin2a = 2 * math.sqrt(cos2 * sin2)
    conc = {"oe": 2 * sin2a / N, "oo": 4 * cos2 / N, "ee": 4 * sin2 / N}
    return WStateData(N, s, sector, alpha, lam, e_ns, e_ns1, rho, negs, conc)


def w_state_concurrences_ed(data: WStateData) -> dict[str, float]:
    """Wootters concurrence of the embedded pair states (spin 1/2 only)."""
    return {c: concurrence(r) for c, r in data.rho.items()}


# ---------------------------------------------------------------------------
# two-sublattice mean field

@dataclass(frozen=True)
class MeanFieldResult:
    phase: str                 # "aligned_up", "aligned_down", "afm", "sb"
    theta_o: float
    theta_e: float
    energy: float              # per site

    @property
    def sz(self) -> tuple[float, float]:
        return math.cos(self.theta_o), math.cos(self.theta_e)


def mean_field_energy(theta_o, theta_e, h_o, h_e, spin, J, delta) -> float:
    """Energy per site of a two-sublattice product state on a cyclic chain."""
    s = _spin(spin)
    return (-0.5 * s * (h_o * math.cos(theta_o) + h_e * math.cos(theta_e))
            - s * s * (J * math.sin(theta_o) * math.sin(theta_e)
                       + J * delta * math.cos(theta_o) * math.cos(theta_e)))


def symmetry_breaking_angles(h_o, h_e, spin, J, delta):
    """Neel-type stationary angles, ``cos t_o = -(sJ/2h_s^2)[h_e D + h_o r]`` with
    ``r = sqrt((h_e^2 - 4h_s^2)/(h_o^2 - 4h_s^2))`` (and o <-> e); ``None``
    where the root or the cosines leave their domain.

    With this sign of the anisotropy term both cosines reach 1 exactly on the
    hyperbola bordering the aligned phase.
    """
    s = _spin(spin)
    hs2 = (s * J) ** 2 * (delta ** 2 - 1)
    if hs2 <= 0:
        return None
    go, ge = h_o ** 2 - 4 * hs2, h_e ** 2 - 4 * hs2
    if go == 0 or ge == 0 or go * ge < 0:
        return None
    r_o = math.sqrt(ge / go)
    r_e = math.sqrt(go / ge)
    c_o = -s * J / (2 * hs2) * (h_e * delta + h_o * r_o)
    c_e = -s * J / (2 * hs2) * (h_o * delta + h_e * r_e)
    if abs(c_o) > 1 + 1e-12 or abs(c_e) > 1 + 1e-12:
        return None
    return math.acos(max(-1.0, min(1.0, c_o))), math.acos(max(-1.0, min(1.0, c_e)))


def afm_condition(h1, h2, spin, J, delta) -> bool:
    """Region where the Neel (AFM) product state is the lowest mean-field phase:
    ``(h1/2sJ + D)(h2/2sJ - D) <= -1`` if ``-h1/2sJ > D`` (odd spins down), or
    ``(h1/2sJ - D)(h2/2sJ + D) <= -1`` if ``h1/2sJ > D`` (odd spins up)."""
    x, y = h1 / (2 * spin * J), h2 / (2 * spin * J)
    if -x > delta and (x + delta) * (y - delta) <= -1:
        return True
    if x > delta and (x - delta) * (y + delta) <= -1:
        return True
    return False


def mean_field(h_o: float, h_e: float, spin, J: float, delta: float) -> MeanFieldResult:
    """Lowest two-sublattice mean-field state among the aligned, Neel and
    symmetry-breaking stationary points."""
    s = _spin(spin)
    cands = [("aligned_up", 0.0, 0.0), ("aligned_down", math.pi, math.pi),
             ("afm", 0.0, math.pi), ("afm", math.pi, 0.0)]
    sb = symmetry_breaking_angles(h_o, h_e, s, J, delta)
    if sb is not None:
        to, te = sb
        # stationary points come with both signs of the relative tilt
        cands.append(("sb", to, te))
        cands.append(("sb", to, -te))
    best = None
    for phase, to, te in cands:
        e = mean_field_energy(to, te, h_o, h_e, s, J, delta)
        if best is None or e < best[3] - 1e-13:
            best = (phase, to, te, e)
    phase, to, te, e = best
    if phase == "sb" and (min(abs(math.sin(to)), abs(math.sin(te))) < 1e-12):
        phase = ("aligned_up" if math.cos(to) > 0 and math.cos(te) > 0 else
                 "aligned_down" if math.cos(to) < 0 and math.cos(te) < 0 else "afm")
    return MeanFieldResult(phase, to, te, e)
