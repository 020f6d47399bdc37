"""Compare the numba and pure-numpy sector kernels.

Each backend runs in its own interpreter because the choice is fixed when
``xxzfact`` is imported (``XXZFACT_DISABLE_NUMBA=1`` selects numpy).

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --cases 12:1/2 10:1 --repeat 5
"""
import argparse
import json
import os
import subprocess
import sys
import time


def _measure(n, spin, repeat):
    import numpy as np

    from xxzfact import backend_name
    from xxzfact.exact import _kernels
    from xxzfact.exact.basis import sector_basis
    from xxzfact.exact.hamiltonian import exchange_matrix
    from xxzfact.lattice import build_chain

    g = build_chain(n, spin, 1.0, 1.2, cyclic=True)
    two_M = g.two_S % 2
    # warm-up pays the jit compilation once
    exchange_matrix(g, sector_basis(g, two_M, None))
    ei, ej, jxy, jz = g.edge_arrays()
    best = {"basis": np.inf, "kernels": np.inf, "exchange": np.inf}
    for _ in range(repeat):
        t0 = time.perf_counter()
        b = sector_basis(g, two_M, None)
        t1 = time.perf_counter()
        _kernels.hopping_coo(b.codes, b.dims, b.strides, b.two_s, ei, ej, -0.5 * jxy)
        _kernels.zz_diagonal(b.codes, b.dims, b.strides, b.two_s, ei, ej, jz)
        t2 = time.perf_counter()
        exchange_matrix(g, b)
        t3 = time.perf_counter()
        best["basis"] = min(best["basis"], t1 - t0)
        best["kernels"] = min(best["kernels"], t2 - t1)
        best["exchange"] = min(best["exchange"], t3 - t2)
    return {"backend": backend_name(), "N": n, "spin": spin, "dim": int(len(b.codes)),
            **best}


def _child(args):
    out = []
    for case in args.cases:
        n, spin = case.split(":")
        out.append(_measure(int(n), spin, args.repeat))
    print(json.dumps(out))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", nargs="+", default=["12:1/2", "16:1/2", "8:1", "10:1"],
                    help="N:spin pairs, e.g. 12:1/2")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        _child(args)
        return 0

    results = {}
    for disabled in ("0", "1"):
        env = dict(os.environ, XXZFACT_DISABLE_NUMBA=disabled)
        cmd = [sys.executable, __file__, "--child", "--repeat", str(args.repeat),
               "--cases", *args.cases]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        for row in json.loads(proc.stdout):
            results.setdefault((row["N"], row["spin"]), {})[row["backend"]] = row

    print(f"{'N':>3} {'spin':>5} {'dim':>8} {'stage':>9} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for (n, spin), rows in results.items():
        fast, slow = rows.get("numba"), rows.get("numpy")
        if fast is None:
            print(f"numba unavailable; numpy only: {slow}")
            continue
        # "exchange" is the full block build, kernels plus sparse assembly
        for stage in ("basis", "kernels", "exchange"):
            print(f"{n:>3} {spin:>5} {fast['dim']:>8} {stage:>9} {fast[stage]:>10.4f} "
                  f"{slow[stage]:>10.4f} {slow[stage] / fast[stage]:>8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
