"""Cross-module oracle checks run by ``xxzfact validate``."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import analytic
from .entanglement import partial_trace
from .exact import SectorSystem, build_full, ground_scan
from .exact.spectrum import degeneracy_tol
from .factorization import (ExtremalityError, factorize, product_state_amplitudes,
                            propagate_angles, verify_extremal)
from .scenario import Scenario

FULL_SPACE_MAX = 1 << 14


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)


def _uniform(graph):
    deltas = graph.deltas()
    return (graph.is_uniform_spin and len(deltas) > 0 and np.allclose(deltas, deltas[0])
            and len({e.j_xy for e in graph.edges}) == 1)


def run_checks(scn: Scenario) -> list[Check]:
    g = scn.graph
    tol = scn.tolerances
    signs = scn.signs()
    sol = factorize(g, signs)
    checks = []

    s = g.spins
    zs = float(abs(np.dot(s, sol.fields)))
    checks.append(Check("zero_sum", zs <= tol["zero_sum"], zs, tol["zero_sum"]))

    worst = 0.0
    for seed in (math.pi / 6, math.pi / 3, math.pi / 2):
        ang = propagate_angles(g, signs, seed)
        t = np.tan(ang.theta / 2)
        for k, e in enumerate(g.edges):
            eta = analytic.eta_ratio(e.delta, signs.nu[k])
            worst = max(worst, abs(t[e.j] - eta * t[e.i]) / max(1.0, abs(t[e.j])))
    checks.append(Check("angle_ratio", worst <= 1e-12, worst, 1e-12))

    system = SectorSystem(g)
    jz = np.array([e.j_z for e in g.edges])
    highest = bool(np.all(jz < 0))
    spec = ground_scan(g, sol.fields, k=2, system=system, highest=highest)
    ref = sol.energy
    dev = abs(spec.extreme_energy - ref) / max(1.0, abs(ref))
    detail = ""
    ok = dev <= tol["energy_rtol"]
    if np.all(jz > 0) or highest:
        try:
            verify_extremal(g, sol, spec, rtol=tol["energy_rtol"])
        except ExtremalityError as exc:
            ok, detail = False, str(exc)
    checks.append(Check("separable_energy_" + ("max" if highest else "min"), ok, dev,
                        tol["energy_rtol"], detail))

    per_sector = [abs(sp.energies[0] - ref) for sp in spec.sectors.values()]
    coalesce = max(per_sector) <= degeneracy_tol(ref)
    checks.append(Check("sectors_coalesce", coalesce, float(max(per_sector)),
                        degeneracy_tol(ref),
                        f"degeneracy {spec.degeneracy}, 2S+1 = {g.two_S + 1}"))

    worst = 0.0
    for two_M in system.labels:
        ps = analytic.projected_state(g, signs, two_M / 2)
        mat = system.block(two_M, sol.fields).matrix
        v = ps.amplitudes
        worst = max(worst, float(np.linalg.norm(mat @ v - ref * v)))
    checks.append(Check("projected_state_residual", worst <= tol["residual"], worst,
                        tol["residual"]))

    if g.hilbert_dim <= FULL_SPACE_MAX:
        full = build_full(g, sol.fields, FULL_SPACE_MAX)
        psi = product_state_amplitudes(g, sol.angles)
        r = float(np.linalg.norm(full.matrix @ psi - ref * psi))
        checks.append(Check("product_state_residual", r <= tol["residual"], r, tol["residual"]))

    if g.n_sites == 2 and g.is_uniform_spin:
        e = g.edges[0]
        worst = 0.0
        for two_M in system.labels:
            a = analytic.pair_projected_state(g.spins[0], e.delta, signs.nu[0], two_M / 2)
            b = analytic.projected_state(g, signs, two_M / 2)
            worst = max(worst, float(np.abs(a.amplitudes - b.amplitudes).max()))
        checks.append(Check("pair_schmidt_form", worst <= tol["pair_state"], worst,
                            tol["pair_state"]))

    chain = g.geometry in ("open_chain", "cyclic_chain")
    alt = scn.raw.get("signs", "alternating") == "alternating"
    if chain and alt and _uniform(g) and g.edges[0].delta >= 1 and g.n_sites >= 4:
        worst = 0.0
        n = g.n_sites
        for two_M in system.labels:
            ps = analytic.projected_state(g, signs, two_M / 2)
            for cls, (i, j) in (("oe", (0, 1)), ("oo", (0, 2)), ("ee", (1, 3))):
                rho_a = analytic.reduced_pair_alternating(n, g.spins[0], g.edges[0].delta,
                                                          cls, two_M / 2).matrix
                rho_t = partial_trace(ps.amplitudes, ps.basis, (i, j)).matrix
                worst = max(worst, float(np.abs(rho_a - rho_t).max()))
        checks.append(Check("reduced_pair_closed_form", worst <= tol["pair_state"], worst,
                            tol["pair_state"]))
    return checks


def report(scn: Scenario) -> dict:
    checks = run_checks(scn)
    return {
        "scenario": scn.name,
        "source": scn.source,
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }
