"""Scenario documents: one JSON file describing a graph, a factorized
configuration, a field pattern, a sweep and tolerances."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .factorization import SignAssignment, named_signs, signs_from_steps
from .lattice import LatticeError, SpinGraph, graph_from_dict
from .sweep import FieldPattern, GridSpec, load_schema, make_pattern

DEFAULT_TOLERANCES = {
    "zero_sum": 1e-12,
    "energy_rtol": 1e-10,
    "residual": 1e-10,
    "pair_state": 1e-10,
}


class ScenarioError(ValueError):
    """Unreadable, schema-invalid or inconsistent scenario."""


@dataclass
class Scenario:
    name: str
    graph: SpinGraph
    raw: dict
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str | None = None

    @property
    def has_signs(self) -> bool:
        return "signs" in self.raw

    def signs(self) -> SignAssignment:
        spec = self.raw.get("signs", "alternating")
        if isinstance(spec, str):
            return named_signs(self.graph, spec)
        if isinstance(spec, dict):
            return signs_from_steps(self.graph, spec["steps"])
        if len(spec) != len(self.graph.edges):
            raise ScenarioError(f"signs list has {len(spec)} entries for "
                                f"{len(self.graph.edges)} edges")
        return SignAssignment(tuple(int(x) for x in spec))

    def pattern(self) -> FieldPattern:
        return make_pattern(self.graph, self.raw.get("pattern", "alternating"))

    @property
    def sweep(self) -> dict:
        return self.raw.get("sweep", {})

    def grid(self, step: float | None = None) -> GridSpec:
        """Grid from the sweep block; defaults to 0.05 sJ steps over [-6sJ, 6sJ]^2.

        An explicit ``step`` overrides the one stored in the scenario.
        """
        g = dict(self.sweep.get("grid", {}))
        scale = _energy_scale(self.graph)
        if step is None:
            step = g.get("step", 0.05 * scale)
        if "half_width" in g or not any(k in g for k in ("h1_min", "h1_max", "h2_min", "h2_max")):
            hw = g.get("half_width", 6 * scale)
            return GridSpec(-hw, hw, -hw, hw, step)
        return GridSpec(g["h1_min"], g["h1_max"], g["h2_min"], g["h2_max"], step)

    def line_points(self):
        line = self.sweep.get("line")
        if line is None:
            return None
        (x0, y0), (x1, y1), n = line["start"], line["stop"], line["num"]
        if n == 1:
            return [(float(x0), float(y0))]
        return [(x0 + (x1 - x0) * k / (n - 1), y0 + (y1 - y0) * k / (n - 1)) for k in range(n)]

    def pairs(self):
        return [tuple(p) for p in self.sweep.get("pairs", [(0, 1)])]

    def output(self, key: str, default=None):
        return self.raw.get("outputs", {}).get(key, default)


def _energy_scale(graph: SpinGraph) -> float:
    # s |J| of the first edge, the natural unit of the field plane
    if not graph.edges:
        return 1.0
    return float(graph.spins[0]) * abs(graph.edges[0].j_xy) or 1.0


def _check_sites(graph: SpinGraph, raw: dict) -> None:
    n = graph.n_sites
    bad = []
    for p in raw.get("sweep", {}).get("pairs", []):
        if max(p) >= n or p[0] == p[1]:
            bad.append(f"pair {p}")
    pat = raw.get("pattern")
    if isinstance(pat, dict):
        for key in ("h1_sites", "h2_sites"):
            bad += [f"{key} entry {i}" for i in pat.get(key, []) if i >= n]
        for key in ("a", "b", "c"):
            if key in pat and len(pat[key]) != n:
                bad.append(f"pattern vector {key!r} of length {len(pat[key])}")
    if bad:
        raise ScenarioError(f"scenario references missing sites ({n} sites): " + ", ".join(bad))


def scenario_from_dict(raw: dict, source: str | None = None) -> Scenario:
    try:
        jsonschema.validate(raw, load_schema("scenario"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {exc.message}") from None
    try:
        graph = graph_from_dict(raw["graph"])
    except (LatticeError, KeyError) as exc:
        raise ScenarioError(f"invalid graph block: {exc}") from None
    _check_sites(graph, raw)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(raw.get("tolerances", {}))
    return Scenario(raw.get("name", Path(source).stem if source else "scenario"),
                    graph, raw, tol, source)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {str(path)!r}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(raw, str(path))
