import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from xxzfact import sweep
from xxzfact.exact import SectorSystem
from xxzfact.factorization import factorizing_fields, named_signs
from xxzfact.lattice import build_chain, build_rectangular
from xxzfact.sweep import GridSpec, make_pattern, scan_diagram, scan_negativity

RING8 = build_chain(8, 1, 1.0, 1.2, cyclic=True)


def test_grid_axes():
    g = GridSpec.square(1.0, 0.25)
    assert g.h1.tolist() == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
    assert GridSpec(0, 1, 0, 0.3, 0.1).h2.tolist() == [0.0, 0.1, 0.2, 0.3]


@pytest.mark.parametrize("name", ["alternating", "next_alternating", "zero_bulk"])
def test_pattern_hits_factorizing_field(name):
    g = build_chain(12, "1/2", 1.0, 1.2, cyclic=True)
    pat = make_pattern(g, name)
    hs = 0.5 * math.sqrt(0.44)
    h = factorizing_fields(g, named_signs(g, name))
    assert np.allclose(pat.fields(2 * hs, -2 * hs), h, atol=1e-14)


def test_lattice_zero_bulk_pattern():
    g = build_rectangular(3, 4, "1/2", 1.0, 1.2)
    pat = make_pattern(g, "zero_bulk")
    hs = 0.5 * math.sqrt(0.44)
    h = factorizing_fields(g, named_signs(g, "zero_bulk"))
    assert np.allclose(pat.fields(2 * hs, -2 * hs), h, atol=1e-14)
    assert pat.fields(1.0, 1.0)[5] == 0.0


def test_pattern_spec_forms():
    g = build_chain(4, "1/2", 1.0, 1.2, cyclic=True)
    p = make_pattern(g, {"h1_sites": [0], "h2_sites": [2]})
    assert p.fields(1.0, -2.0).tolist() == [1.0, 0.0, -2.0, 0.0]
    q = make_pattern(g, {"a": [1, 0, 0, 0], "b": [0, 0, 1, 0], "c": [0.5, 0, 0, 0]})
    assert q.fields(1.0, 1.0).tolist() == [1.5, 0.0, 1.0, 0.0]
    assert not q.reflected_symmetric()
    with pytest.raises(ValueError):
        make_pattern(g, {"a": [1, 0], "b": [0, 1]})


def test_lines_and_points_agree():
    grid = GridSpec.square(3.0, 0.5)
    a = scan_diagram(RING8, "alternating", grid, use_lines=True)
    b = scan_diagram(RING8, "alternating", grid, use_lines=False)
    assert np.array_equal(a.two_M, b.two_M)
    assert np.array_equal(a.boundary, b.boundary)
    assert np.allclose(a.energy, b.energy, atol=1e-9)


def test_serial_and_parallel_identical():
    g = build_chain(8, "1/2", 1.0, 1.5, cyclic=True)
    grid = GridSpec.square(2.0, 0.25)
    a = scan_diagram(g, "next_alternating", grid, workers=1)
    b = scan_diagram(g, "next_alternating", grid, workers=2)
    assert sweep.diagram_csv(a) == sweep.diagram_csv(b)
    c = scan_diagram(g, "zero_bulk", grid, workers=3, use_lines=False)
    d = scan_diagram(g, "zero_bulk", grid, workers=1, use_lines=False)
    assert sweep.diagram_csv(c) == sweep.diagram_csv(d)


@pytest.mark.parametrize("name", ["alternating", "next_alternating", "zero_bulk"])
def test_reflection_symmetry(name):
    g = build_chain(8, "1/2", 1.0, 1.2, cyclic=True)
    d = scan_diagram(g, name, GridSpec.square(2.0, 0.2))
    flipped = -d.two_M[::-1, ::-1]
    ok = ~(d.boundary | d.boundary[::-1, ::-1])
    assert np.array_equal(d.two_M[ok], flipped[ok])


def test_free_spins_fan():
    g = build_chain(6, 1, 0.0, 0.0, cyclic=True)
    d = scan_diagram(g, "alternating", GridSpec.square(1.0, 0.5))
    for i, h1 in enumerate(d.h1):
        for j, h2 in enumerate(d.h2):
            if h1 == 0 or h2 == 0:
                assert d.boundary[i, j]
            else:
                assert d.two_M[i, j] == 6 * (np.sign(h1) + np.sign(h2))


def test_single_transition_below_critical_offset():
    sysm = SectorSystem(RING8)
    pat = make_pattern(RING8, "alternating")
    for delta in (0.0, 1.0, 2.6):
        seq = sweep.line_spectrum(RING8, pat, delta, sysm).ground_sequence(-20, 20)
        assert [s[0] for s in seq] == [-16, 16]
    for delta in (2.7, 4.0, -3.0):
        seq = sweep.line_spectrum(RING8, pat, delta, sysm).ground_sequence(-20, 20)
        labels = [s[0] for s in seq]
        assert len(labels) == 17
        assert labels == sorted(labels)


def test_fan_starts_on_boundary_curve():
    from xxzfact.analytic import boundary_hyperbola

    pat = make_pattern(RING8, "alternating")
    ls = sweep.line_spectrum(RING8, pat, 4.0)
    seq = ls.ground_sequence(-20, 20)
    # leaving M = -Ns at the lower end and reaching M = Ns at the upper end
    h2_lo = seq[0][2]
    h2_hi = seq[-2][2]
    dn = boundary_hyperbola(1, 1.0, 1.2, -1)
    up = boundary_hyperbola(1, 1.0, 1.2, 1)
    assert abs(dn.residual(h2_lo + 4.0, h2_lo)) < 1e-9
    assert abs(up.residual(h2_hi + 4.0, h2_hi)) < 1e-9


def test_negativity_stepwise_along_line():
    g = build_chain(8, "1/2", 1.0, 1.2, cyclic=True)
    pat = make_pattern(g, "alternating")
    delta = 2.0
    pts = [(h2 + delta, h2) for h2 in np.linspace(-2.5, 0.5, 31)]
    recs = scan_negativity(g, pat, [(0, 1), (0, 2)], pts)
    by_m = {}
    for r in recs:
        if r.two_M is None:
            continue
        by_m.setdefault(r.two_M, []).append(r.values[(0, 1)])
    assert len(by_m) >= 3
    for vals in by_m.values():
        assert max(vals) - min(vals) < 1e-10


def test_negativity_boundary_without_sector():
    g = build_chain(8, "1/2", 1.0, 1.2, cyclic=True)
    hs = 0.5 * math.sqrt(0.44)
    recs = scan_negativity(g, "alternating", [(0, 1)], [(2 * hs, -2 * hs)])
    assert recs[0].two_M is None and recs[0].values == {}
    recs = scan_negativity(g, "alternating", [(0, 1), (0, 3)], [(2 * hs, -2 * hs)], M=1)
    assert recs[0].two_M == 2
    assert recs[0].values[(0, 1)] == pytest.approx(recs[0].values[(0, 3)], abs=1e-10)


def test_empty_grid_csv():
    d = scan_diagram(RING8, "alternating", GridSpec(1.0, 0.0, 0.0, 1.0, 0.5))
    assert sweep.diagram_csv(d) == "h1,h2,M2,E,boundary_flag\n"


def test_outputs_and_schemas():
    g = build_chain(6, "1/2", 1.0, 1.2, cyclic=True)
    d = scan_diagram(g, "alternating", GridSpec.square(1.0, 0.5))
    text = sweep.emit(d, None, "json")
    jsonschema.validate(json.loads(text), sweep.load_schema("diagram"))
    csv_text = sweep.emit(d, None, "csv")
    assert csv_text.splitlines()[0] == ",".join(sweep.CSV_COLUMNS)
    assert len(csv_text.splitlines()) == 1 + 25
    assert "-0.000000" not in csv_text
    recs = scan_negativity(g, "alternating", [(0, 1)], [(0.5, -1.0), (0.0, 0.0)])
    nj = sweep.emit(recs, None, "json", {"scenario": "t"})
    jsonschema.validate(json.loads(nj), sweep.load_schema("negativity"))
    assert sweep.emit(recs, None, "csv").splitlines()[0].endswith("N_0_1")
    with pytest.raises(ValueError):
        sweep.emit(d, None, "xml")


def test_emit_writes_file(tmp_path):
    g = build_chain(4, "1/2", 1.0, 1.2, cyclic=True)
    d = scan_diagram(g, "alternating", GridSpec.square(1.0, 1.0))
    out = tmp_path / "d.csv"
    text = sweep.emit(d, out, "csv")
    assert out.read_text() == text


def test_transitions_and_distances():
    d = scan_diagram(RING8, "alternating", GridSpec.square(6.0, 0.5))
    assert d.plateaus() == set(range(-16, 17, 2))
    pts = d.transitions(16, 14)
    assert pts
    for h1, h2 in pts:
        assert d.distance_to_plateau((h1, h2), 16) <= 0.5 + 1e-12


GOLDEN = Path(__file__).parent / "golden" / "ring8_s1_coarse.csv"


def test_golden_coarse_diagram():
    d = scan_diagram(RING8, "alternating", GridSpec.square(6.0, 0.6))
    assert d.shape == (21, 21)
    assert sweep.diagram_csv(d) == GOLDEN.read_text()


def test_golden_aligned_corner_energy():
    row = GOLDEN.read_text().splitlines()[1].split(",")
    # fully polarized down at h1 = h2 = -6: E = -Ns h - N s^2 Jz
    assert float(row[3]) == pytest.approx(-8 * 6.0 - 8 * 1.2, abs=1e-9)


def test_contiguous_negativity_grows_toward_zero_magnetization():
    hs = math.sqrt(0.44)
    vals = []
    for M in range(0, 9):
        rec = scan_negativity(RING8, "alternating", [(0, 1), (0, 3)], [(2 * hs, -2 * hs)], M=M)[0]
        # the third neighbour sees the same reduced state as the first
        assert rec.values[(0, 3)] == pytest.approx(rec.values[(0, 1)], abs=1e-10)
        vals.append(rec.values[(0, 1)])
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-12


def test_distant_zero_field_pair_stays_entangled():
    g = build_chain(12, "1/2", 1.0, 1.2, cyclic=True)
    recs = scan_negativity(g, "zero_bulk", [(3, 9)], [(t, -t) for t in (1.0, 2.0, 5.0, 10.0)])
    vals = [r.values[(3, 9)] for r in recs]
    assert all(r.two_M == 0 for r in recs)
    assert min(vals) > 0.13
    assert vals[-1] >= vals[0]
