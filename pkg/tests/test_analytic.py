import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize
from scipy.special import eval_jacobi

from xxzfact import analytic
from xxzfact.analytic import (afm_condition, boundary_hyperbola, jacobi_Q,
                              mean_field, mean_field_energy, pair_projected_state,
                              projected_state, reduced_pair_alternating,
                              symmetry_breaking_angles, w_state_negativities, w_state_package)
from xxzfact.entanglement import negativity, partial_trace
from xxzfact.exact import SectorSystem, build_sector, expectation_sz, lowest_eigenpairs
from xxzfact.factorization import (FactorizationError, SignAssignment, enumerate_sign_assignments,
                                   factorize, named_signs)
from xxzfact.lattice import build_chain, build_rectangular


def _q_exact(n, m, k, eta2):
    """Direct sum in exact rationals (eta^2 passed as a Fraction)."""
    tot = Fraction(0)
    for j in range(n + 1):
        a, b = n + m - k, n + m + k
        if 0 <= n - j <= a and 0 <= j <= b:
            tot += math.comb(a, n - j) * math.comb(b, j) * eta2 ** (n - j)
    return tot


def test_q_degree_zero():
    assert jacobi_Q(0, 3, 1, 1.7).value == 1.0


def test_q_pair_half():
    eta = 1.2 + math.sqrt(0.44)
    assert jacobi_Q(1, 0, 0, eta).value == pytest.approx(eta ** 2 + 1, rel=1e-14)


def test_q_direct_sum_example():
    eta = 1.8633
    want = float(_q_exact(5, 2, 1, Fraction(eta) ** 2))
    assert jacobi_Q(5, 2, 1, eta).value == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 9, 14, 20])
@pytest.mark.parametrize("m, k", [(0, 0), (2, 1), (3, -2), (1.5, 0.5), (4, 0)])
def test_q_against_jacobi_polynomial(n, m, k):
    eta = 1.6
    e2 = eta * eta
    x = (e2 + 1) / (e2 - 1)
    want = (e2 - 1) ** n * eval_jacobi(n, m - k, m + k, x)
    assert jacobi_Q(n, m, k, eta).value == pytest.approx(want, rel=1e-10)


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 24), st.integers(0, 12), st.integers(-6, 6),
       st.fractions(Fraction(1, 3), Fraction(5)))
def test_q_random_tuples(n, m, k, eta2):
    if n + m - abs(k) < 0:
        return
    want = _q_exact(n, m, k, eta2)
    got = jacobi_Q(n, m, k, math.sqrt(eta2))
    if want == 0:
        assert got.log_value == -math.inf
    else:
        assert got.log_value == pytest.approx(math.log(want), abs=1e-11)


def test_q_beyond_float_range():
    eta2 = Fraction(7)
    q = jacobi_Q(400, 0, 4, math.sqrt(7))
    exact = _q_exact(400, 0, 4, eta2)
    assert q.log_value > 800
    assert q.log_value == pytest.approx(math.log(exact.numerator) - math.log(exact.denominator),
                                        rel=1e-13)


def test_pair_half_projection():
    eta = 1.2 + math.sqrt(0.44)
    ps = pair_projected_state("1/2", 1.2, 1, 0)
    assert ps.basis.states() == [(-0.5, 0.5), (0.5, -0.5)]
    assert ps.amplitudes == pytest.approx(np.array([1, eta]) / math.sqrt(1 + eta ** 2))


def test_pair_schmidt_matches_general_form():
    for spin in ("1/2", 1, "3/2", 2):
        g = build_chain(2, spin, 1.0, 1.2)
        for sign in (1, -1):
            for two_M in range(-g.two_S, g.two_S + 1, 2):
                a = pair_projected_state(spin, 1.2, sign, two_M / 2)
                b = projected_state(g, SignAssignment((sign,)), two_M / 2)
                assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-14)


def test_pair_spin1_against_ed():
    eta = 1.2 + math.sqrt(0.44)
    g = build_chain(2, 1, 1.0, 1.2)
    sol = factorize(g, SignAssignment((1,)))
    blk = build_sector(g, sol.fields, 0)
    w, v = lowest_eigenpairs(blk.matrix, 2)
    assert w[0] == pytest.approx(-1.2) and w[1] - w[0] > 1e-3
    want = np.array([1, 2 * eta, eta ** 2])
    want /= np.linalg.norm(want)
    ps = pair_projected_state(1, 1.2, 1, 0)
    assert ps.amplitudes == pytest.approx(want, abs=1e-14)
    assert abs(v[:, 0] @ want) == pytest.approx(1.0, abs=1e-12)


def test_aligned_projection():
    g = build_chain(5, "3/2", 1.0, 1.4)
    ps = projected_state(g, named_signs(g, "alternating"), 7.5)
    assert ps.amplitudes.tolist() == [1.0]


@pytest.mark.parametrize("graph", [
    build_chain(6, 1, 1.0, 1.3, cyclic=True),
    build_rectangular(2, 3, "1/2", 1.0, 1.7),
    build_chain(5, "3/2", 1.0, -1.5),
])
def test_projected_states_are_eigenstates(graph):
    sysm = SectorSystem(graph)
    for signs in list(enumerate_sign_assignments(graph))[:4]:
        sol = factorize(graph, signs)
        for two_M in sysm.labels:
            ps = projected_state(graph, signs, two_M / 2)
            mat = sysm.block(two_M, sol.fields).matrix
            r = np.linalg.norm(mat @ ps.amplitudes - sol.energy * ps.amplitudes)
            assert r < 1e-10


def test_path_form_equals_potential_form():
    g = build_chain(6, 1, 1.0, 1.3, cyclic=True)
    signs = named_signs(g, "zero_bulk")
    for two_M in (0, 4, -6):
        a = projected_state(g, signs, two_M / 2)
        b = projected_state(g, signs, two_M / 2, path=[0, 1, 2, 3, 4, 5])
        assert np.allclose(a.amplitudes, b.amplitudes, atol=1e-14)
    with pytest.raises(FactorizationError):
        projected_state(g, signs, 0, path=[0, 1, 2])


@pytest.mark.parametrize("n, spin", [(5, "1/2"), (6, 1), (7, 1), (6, "3/2")])
def test_reduced_pairs_vs_partial_trace(n, spin):
    g = build_chain(n, spin, 1.0, 1.25, cyclic=n % 2 == 0)
    signs = named_signs(g, "alternating")
    for two_M in range(-g.two_S, g.two_S + 1, 2):
        ps = projected_state(g, signs, two_M / 2)
        for cls, pair in (("oe", (0, 1)), ("oo", (0, 2)), ("ee", (1, 3))):
            want = partial_trace(ps.amplitudes, ps.basis, pair).matrix
            got = reduced_pair_alternating(n, spin, 1.25, cls, two_M / 2).matrix
            assert np.allclose(got, want, atol=1e-12)


def test_reduced_pair_sign_branch():
    g = build_chain(6, 1, 1.0, 1.25, cyclic=True)
    flipped = named_signs(g, "alternating").flipped()
    ps = projected_state(g, flipped, 1)
    want = partial_trace(ps.amplitudes, ps.basis, (0, 1)).matrix
    got = reduced_pair_alternating(6, 1, 1.25, "oe", 1, sign=-1).matrix
    assert np.allclose(got, want, atol=1e-12)


def test_reduced_pair_errors():
    with pytest.raises(FactorizationError):
        reduced_pair_alternating(8, 1, 1.2, "xy", 0)
    with pytest.raises(FactorizationError):
        reduced_pair_alternating(8, 1, 1.2, "oe", 9)
    with pytest.raises(FactorizationError):
        reduced_pair_alternating(8, 1, -1.2, "oe", 0)
    with pytest.raises(FactorizationError):
        reduced_pair_alternating(3, 1, 1.2, "ee", 0)


def test_three_negativities_spin4_finite():
    for two_M in range(0, 65, 8):
        vals = analytic.alternating_pair_negativities(8, 4, 1.2, two_M / 2)
        assert all(math.isfinite(v) and v >= 0 for v in vals.values())


# ---------------------------------------------------------------------------
# boundary curve

@pytest.mark.parametrize("spin, delta", [("1/2", 1.2), (1, 1.2), (1, 2.0), ("3/2", 3.0)])
def test_branches_cross_at_factorizing_point(spin, delta):
    up = boundary_hyperbola(spin, 1.0, delta, 1)
    dn = boundary_hyperbola(spin, 1.0, delta, -1)
    hs = float(Fraction(spin)) * math.sqrt(delta ** 2 - 1)
    for h1, h2 in up.crossings():
        assert abs(h1) == pytest.approx(2 * hs, rel=1e-15)
        assert abs(up.residual(h1, h2)) < 1e-10
        assert abs(dn.residual(h1, h2)) < 1e-10


def test_branch_domain():
    b = boundary_hyperbola(1, 1.0, 1.2, 1)
    with pytest.raises(ValueError):
        b.h2(0.0)
    with pytest.raises(ValueError):
        b.h2(-5.0)
    h1 = np.array([1.5, 3.0, 6.0])
    assert np.all(np.abs(b.residual(h1, b.h2(h1))) < 1e-12)
    assert all(abs(y) <= 4 for _, y in b.sample(4.0, 50))


def test_isotropic_branch_degenerates():
    b = boundary_hyperbola("1/2", 1.0, 1.0, 1)
    assert b.h_s == 0.0
    assert b.crossings() == [(0.0, -0.0), (-0.0, 0.0)]


def test_bad_branch():
    with pytest.raises(ValueError):
        boundary_hyperbola(1, 1.0, 1.2, 0)


# ---------------------------------------------------------------------------
# one-magnon states

def _ed_sector_state(n, spin, J, jz, h1, h2, two_M):
    g = build_chain(n, spin, J, jz, cyclic=True)
    blk = build_sector(g, [h1, h2] * (n // 2), two_M / 2)
    w, v = lowest_eigenpairs(blk.matrix, 2)
    return w, v[:, 0], blk.basis


@pytest.mark.parametrize("spin", ["1/2", 1])
@pytest.mark.parametrize("sector", [1, -1])
def test_w_state_against_ed(spin, sector):
    n, J, jz, h1, h2 = 8, 1.0, 1.2, 0.9, -2.4
    data = w_state_package(n, spin, J, jz, h1, h2, sector)
    two_M = sector * (data.n_sites * int(2 * float(Fraction(spin))) - 2)
    w, v, basis = _ed_sector_state(n, spin, J, jz, h1, h2, two_M)
    assert w[0] == pytest.approx(data.energy_oneflip, abs=1e-12)
    for cls, pair in (("oe", (2, 5)), ("oo", (0, 4)), ("ee", (1, 7))):
        rho = partial_trace(v, basis, pair).matrix
        assert np.allclose(rho, data.rho[cls].matrix, atol=1e-12)


def test_w_state_site_magnetization():
    n, s = 8, 0.5
    data = w_state_package(n, "1/2", 1.0, 1.2, 0.4, -1.1)
    _, v, basis = _ed_sector_state(n, "1/2", 1.0, 1.2, 0.4, -1.1, 6)
    assert expectation_sz(v, basis, 0) == pytest.approx(s - 2 * data.cos_alpha ** 2 / n)
    assert expectation_sz(v, basis, 1) == pytest.approx(s - 2 * data.sin_alpha ** 2 / n)


def test_w_state_cos2_variant_disagrees():
    # the same expression with cos^2 a instead of cos^4 a under the root
    n = 8
    data = w_state_package(n, "1/2", 1.0, 1.2, -1.5, 0.5)
    c2 = data.cos_alpha ** 2
    b = 0.5 - 2 * c2 / n
    variant = math.sqrt(b * b + 4 * c2 / n ** 2) - b
    exact = negativity(data.rho["oo"]).value
    assert w_state_negativities(n, c2)["oo"] == pytest.approx(exact, abs=1e-14)
    assert abs(variant - exact) > 1e-2


def test_w_state_rejects_odd_n():
    with pytest.raises(FactorizationError):
        w_state_package(7, "1/2", 1.0, 1.2, 0.1, 0.1)


# ---------------------------------------------------------------------------
# mean field

def _brute_mf(h_o, h_e, spin, J, delta):
    f = lambda t: mean_field_energy(t[0], t[1], h_o, h_e, spin, J, delta)
    best = math.inf
    for a in np.linspace(0.1, 3.0, 4):
        for b in np.linspace(-3.0, 3.0, 5):
            r = minimize(f, [a, b], method="BFGS", options={"gtol": 1e-12})
            best = min(best, r.fun)
    for a in (0.0, math.pi):
        for b in (0.0, math.pi):
            best = min(best, f([a, b]))
    return best


@pytest.mark.parametrize("h_o", [-4.0, -2.0, -0.5, 0.8, 1.9, 3.5])
@pytest.mark.parametrize("h_e", [-3.0, -1.0, 0.3, 2.5])
def test_mean_field_is_the_minimum(h_o, h_e):
    mf = mean_field(h_o, h_e, 1, 1.0, 1.2)
    assert mf.energy == pytest.approx(_brute_mf(h_o, h_e, 1, 1.0, 1.2), abs=1e-9)


def test_sb_angles_reach_alignment_on_boundary():
    s, J, delta = 1, 1.0, 1.2
    hb = boundary_hyperbola(s, J, delta, 1)
    hs2 = (s * J) ** 2 * (delta ** 2 - 1)
    for h1 in (1.5, 2.5, 4.0):
        h2 = hb.h2(h1)
        to, te = symmetry_breaking_angles(h1, h2, s, J, delta)
        assert abs(to) < 1e-6 and abs(te) < 1e-6
        # printed sign of the anisotropy term does not give an aligned onset
        r = math.sqrt((h2 ** 2 - 4 * hs2) / (h1 ** 2 - 4 * hs2))
        printed = s * J / (2 * hs2) * (h2 * delta - h1 * r)
        assert abs(printed - 1) > 0.1


def test_mean_field_onset_is_the_hyperbola():
    s, J, delta = 1, 1.0, 1.2
    hb = boundary_hyperbola(s, J, delta, 1)
    for h1 in (1.5, 2.5, 4.0):
        h2 = hb.h2(h1)
        assert mean_field(h1, h2 + 0.05, s, J, delta).phase == "aligned_up"
        assert mean_field(h1, h2 - 0.05, s, J, delta).phase == "sb"


def test_afm_region():
    s, J, delta = 1, 1.0, 1.2
    h1, h2 = -8.0, 8.0
    assert afm_condition(h1, h2, s, J, delta)
    mf = mean_field(h1, h2, s, J, delta)
    assert mf.phase == "afm"
    assert mf.sz == pytest.approx((-1.0, 1.0))
    assert afm_condition(8.0, -8.0, s, J, delta)
    assert not afm_condition(1.0, -1.0, s, J, delta)


def test_zero_field_aligned_pair():
    # ferromagnetic Ising part: the two aligned states are degenerate minima
    up = mean_field_energy(0.0, 0.0, 0.0, 0.0, 1, 1.0, 1.5)
    dn = mean_field_energy(math.pi, math.pi, 0.0, 0.0, 1, 1.0, 1.5)
    assert up == dn == pytest.approx(-1.5)
    assert mean_field(0.0, 0.0, 1, 1.0, 1.5).energy == pytest.approx(up)
    assert _brute_mf(0.0, 0.0, 1, 1.0, 1.5) == pytest.approx(up, abs=1e-12)


@pytest.mark.parametrize("cls", ["oe", "oo", "ee"])
def test_pair_negativity_decays_as_inverse_size(cls):
    sizes = (8, 12, 16, 20)
    vals = [analytic.alternating_pair_negativities(n, "1/2", 1.2, 0)[cls] for n in sizes]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    scaled = [n * v for n, v in zip(sizes, vals)]
    for a, b in zip(scaled, scaled[1:]):
        assert abs(b / a - 1) < 0.1
