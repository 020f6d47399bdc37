"""Command line entry point: ``xxzfact <subcommand> ...``.

Exit codes: 0 success, 2 failed validation, 3 unreadable or invalid
scenario, 4 Hilbert-space budget exceeded, 1 any other argument error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analytic, sweep
from .entanglement import negativity, partial_trace
from .exact import HilbertBudgetError, ground_scan
from .exact.spectrum import DENSE_MAX
from .factorization import (FactorizationError, count_configurations,
                            enumerate_sign_assignments, factorize)
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_SCHEMA, EXIT_BUDGET = 0, 1, 2, 3, 4


def _dump(obj, out=None):
    text = json.dumps(obj, indent=1, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_text(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _scenario_out(scn, key, fmt):
    # the scenario's output path is used only when its suffix matches the format
    path = scn.output(key)
    if path and path.lower().endswith("." + fmt):
        return path
    return None


def _pair(text):
    try:
        i, j = (int(x) for x in text.replace(",", "-").split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pair must look like 0-3, got {text!r}") from None
    return i, j


def _fields(scn, args):
    """Field vector from --h1/--h2 on the scenario pattern, else the
    factorizing fields of the scenario signs."""
    if args.h1 is not None or args.h2 is not None:
        if args.h1 is None or args.h2 is None:
            raise ValueError("--h1 and --h2 go together")
        return scn.pattern().fields(args.h1, args.h2), False
    return factorize(scn.graph, scn.signs()).fields, True


# ---------------------------------------------------------------------------
# subcommands

def cmd_factorize(args):
    scn = load_scenario(args.scenario)
    g = scn.graph
    stream = [scn.signs()] if (scn.has_signs and not args.all) else enumerate_sign_assignments(g)
    n = 0
    for signs in stream:
        sol = factorize(g, signs, args.seed_theta)
        print(json.dumps({
            "signs": list(signs.nu),
            "fields": [round(float(x), 14) for x in sol.fields],
            "theta": [round(float(x), 14) for x in sol.angles.theta],
            "energy": sol.energy,
        }))
        n += 1
    if n == 0:
        print(json.dumps({"assignments": 0,
                          "diagnostic": "no loop-consistent sign assignment exists"}))
    return EXIT_OK


def cmd_count(args):
    print(count_configurations(args.rows, args.cols))
    return EXIT_OK


def cmd_project(args):
    scn = load_scenario(args.scenario)
    ps = analytic.projected_state(scn.graph, scn.signs(), args.M)
    if args.format == "binary":
        if not args.out:
            raise ValueError("binary output needs --out")
        ps.amplitudes.astype("<f8").tofile(args.out)
        return EXIT_OK
    _dump({"M2": ps.two_M, "dim": len(ps.basis),
           "states": ps.basis.states().astype(float).tolist() if args.states else None,
           "amplitudes": ps.amplitudes.tolist(), "eta_chain": list(ps.eta_chain)}, args.out)
    return EXIT_OK


def cmd_pairstate(args):
    rho = analytic.reduced_pair_alternating(args.N, args.spin, args.delta, args.pair_class,
                                            args.M, args.sign)
    blocks = {str(m): b.tolist() for m, b in rho.blocks().items()}
    _dump({"N": args.N, "spin": args.spin, "delta": args.delta, "class": args.pair_class,
           "M": args.M, "provenance": rho.provenance, "blocks_by_pair_M2": blocks,
           "trace": rho.trace(), "negativity": negativity(rho).value}, args.out)
    return EXIT_OK


def cmd_spectrum(args):
    scn = load_scenario(args.scenario)
    h, at_ff = _fields(scn, args)
    want_vec = args.dump_vectors is not None
    res = ground_scan(scn.graph, h, k=args.k, dense_max=args.dense_max, budget=args.budget,
                      vectors=want_vec)
    doc = {
        "fields": h.tolist(), "at_factorization": at_ff,
        "ground_energy": res.ground_energy, "ground_sectors_M2": res.ground_sectors,
        "degeneracy": res.degeneracy, "tolerance": res.tolerance,
        "sectors": {str(m): {"energies": s.energies.tolist(),
                             "dim": len(res.bases[m])} for m, s in res.sectors.items()},
    }
    if want_vec:
        # sector order ascending in 2M, columns in ascending energy, each vector in
        # lexicographic basis order; little-endian float64
        layout = []
        with open(args.dump_vectors, "wb") as fh:
            offset = 0
            for m in sorted(res.sectors):
                v = res.sectors[m].vectors
                np.ascontiguousarray(v.T).astype("<f8").tofile(fh)
                layout.append({"M2": m, "offset_doubles": offset, "dim": v.shape[0],
                               "count": v.shape[1]})
                offset += v.size
        doc["vector_dump"] = {"path": args.dump_vectors, "dtype": "<f8", "layout": layout}
    _dump(doc, args.out)
    return EXIT_OK


def cmd_diagram(args):
    scn = load_scenario(args.scenario)
    grid = scn.grid(args.step)
    if args.half_width is not None:
        grid = sweep.GridSpec.square(args.half_width, grid.step)
    workers = args.workers or scn.sweep.get("workers")
    d = sweep.scan_diagram(scn.graph, scn.pattern(), grid, workers=workers)
    text = sweep.emit(d, None, args.format)
    _write_text(text, args.out or _scenario_out(scn, "diagram", args.format))
    return EXIT_OK


def cmd_negativity(args):
    scn = load_scenario(args.scenario)
    pairs = args.pairs or scn.pairs()
    if args.h1 is None and args.h2 is None:
        # at factorization: a sector must be named since the level is degenerate
        if args.M is None:
            raise ValueError("at the factorizing fields pass --M (the ground level is degenerate)")
        ps = analytic.projected_state(scn.graph, scn.signs(), args.M)
        recs = [{"pair": list(p), "M2": ps.two_M, "source": "analytic",
                 "value": negativity(partial_trace(ps.amplitudes, ps.basis, p)).value}
                for p in pairs]
        _dump({"kind": "pair_negativity", "at_factorization": True, "records": recs}, args.out)
        return EXIT_OK
    recs = sweep.scan_negativity(scn.graph, scn.pattern(), pairs, [(args.h1, args.h2)],
                                 M=args.M)
    _dump(sweep.negativity_json(recs, {"scenario": scn.name}), args.out)
    return EXIT_OK


def cmd_negativity_map(args):
    scn = load_scenario(args.scenario)
    pts = scn.line_points()
    if pts is None:
        grid = scn.grid(args.step)
        pts = [(float(x), float(y)) for x in grid.h1 for y in grid.h2]
    recs = sweep.scan_negativity(scn.graph, scn.pattern(), args.pairs or scn.pairs(), pts,
                                 M=args.M if args.M is not None else scn.sweep.get("M"))
    text = sweep.emit(recs, None, args.format, {"scenario": scn.name})
    _write_text(text, args.out or _scenario_out(scn, "negativity", args.format))
    return EXIT_OK


def cmd_boundary(args):
    hb = analytic.boundary_hyperbola(args.spin, args.J, args.delta, args.branch)
    lines = ["h1,h2"]
    for x, y in hb.sample(args.h_max, args.num):
        lines.append(f"{x:.10f},{y:.10f}")
    _write_text("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args):
    from .validation import report

    scn = load_scenario(args.scenario)
    rep = report(scn)
    _dump(rep, args.out)
    return EXIT_OK if rep["passed"] else EXIT_INVALID


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xxzfact",
                                description="Ground-state factorization in XXZ spin arrays.")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("scenario", help="scenario JSON file")
        sp.set_defaults(func=func)
        return sp

    sp = scenario_cmd("factorize", cmd_factorize,
                      "factorizing fields, angles and energy as JSON lines")
    sp.add_argument("--all", action="store_true",
                    help="enumerate every sign assignment instead of the scenario one")
    sp.add_argument("--seed-theta", type=float, default=math.pi / 2)

    sp = sub.add_parser("count", help="number of factorized configurations of a rows x cols array")
    sp.add_argument("rows", type=int)
    sp.add_argument("cols", type=int)
    sp.set_defaults(func=cmd_count)

    sp = scenario_cmd("project", cmd_project, "definite-M projection of the factorized state")
    sp.add_argument("--M", type=float, required=True)
    sp.add_argument("--format", choices=("json", "binary"), default="json")
    sp.add_argument("--states", action="store_true", help="include the m-tuples (JSON only)")
    sp.add_argument("--out")

    sp = sub.add_parser("pairstate", help="closed-form alternating reduced pair state")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--spin", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--pair-class", choices=analytic.PAIR_CLASSES, required=True)
    sp.add_argument("--M", type=float, required=True)
    sp.add_argument("--sign", type=int, choices=(1, -1), default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_pairstate)

    sp = scenario_cmd("spectrum", cmd_spectrum,
                      "sector-resolved low spectrum (default: at the factorizing fields)")
    sp.add_argument("--h1", type=float)
    sp.add_argument("--h2", type=float)
    sp.add_argument("--k", type=int, default=4)
    sp.add_argument("--dense-max", type=int, default=DENSE_MAX)
    sp.add_argument("--budget", type=int, default=200_000)
    sp.add_argument("--dump-vectors", metavar="PATH",
                    help="write eigenvectors as little-endian float64")
    sp.add_argument("--out")

    sp = scenario_cmd("diagram", cmd_diagram, "ground magnetization over the (h1, h2) plane")
    sp.add_argument("--step", type=float)
    sp.add_argument("--half-width", type=float)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out")

    for name, func, help_ in (("negativity", cmd_negativity, "pair negativities at one point"),
                              ("negativity-map", cmd_negativity_map,
                               "pair negativities along the scenario line or grid")):
        sp = scenario_cmd(name, func, help_)
        sp.add_argument("--pairs", type=_pair, nargs="+")
        sp.add_argument("--M", type=float)
        sp.add_argument("--out")
        if name == "negativity":
            sp.add_argument("--h1", type=float)
            sp.add_argument("--h2", type=float)
        else:
            sp.add_argument("--step", type=float)
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("boundary", help="samples of the aligned-phase border as CSV")
    sp.add_argument("--spin", type=float, required=True)
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--branch", type=int, choices=(1, -1), default=1)
    sp.add_argument("--h-max", type=float, default=6.0)
    sp.add_argument("--num", type=int, default=200)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_boundary)

    sp = scenario_cmd("validate", cmd_validate, "run the oracle checks on a scenario")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"xxzfact: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except HilbertBudgetError as exc:
        print(f"xxzfact: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FactorizationError, ValueError) as exc:
        print(f"xxzfact: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
