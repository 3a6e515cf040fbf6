"""Compiled versus pure-numpy quadrature kernels, plus the sparse solves they feed.

Usage: python benchmarks/bench_kernels.py [--n-sub 16 32 64 128] [--repeat 5]

For each mesh the two per-iteration kernels (weighted mass data and the
quartic energy integrals) are timed with both backends on the P2 initial
state, and one factorization of A(u) is timed for scale.
"""

import argparse
import time

import numpy as np

from sogpe.assembly import PhysicsParams, discretization, space_operators
from sogpe.kernels import get_backend
from sogpe.linsolve import factorize
from sogpe.mesh import RectDomain, build_space
from sogpe.state import initial_state


def best_of(f, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(n_sub, repeat, backends):
    space = build_space(RectDomain(n_sub=n_sub), 2)
    ops = space_operators(space)
    u = initial_state(space)
    fields = ops.fields(u.coeffs)
    tri = space.triangles
    row = {"n_sub": n_sub, "dofs": 4 * space.N}
    ref = None
    for name, mod in backends.items():
        def wm():
            return mod.weighted_mass_data(fields, tri, ops._phi8, ops._w8, ops.area, ops.scatter, ops.nnz)

        def qi():
            return mod.quartic_integrals(fields, tri, ops._phi8, ops._w8, ops.area)

        out = np.asarray(wm())
        if ref is None:
            ref = out
        else:
            row["max_abs_diff"] = float(np.abs(out - ref).max())
        row[f"{name}_weighted_ms"] = 1e3 * best_of(wm, repeat)
        row[f"{name}_quartic_ms"] = 1e3 * best_of(qi, repeat)
    d = discretization(space, PhysicsParams(k0=10, omega=50, beta11=10, beta12=9, beta22=9))
    A = d.assemble_A(u.coeffs)
    row["lu_ms"] = 1e3 * best_of(lambda: factorize(A, symmetric=True), max(1, repeat // 2))
    return row


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-sub", type=int, nargs="+", default=[16, 32, 64, 128])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the python backend only")
    cols = ["n_sub", "dofs"] + [f"{b}_{k}_ms" for b in backends for k in ("weighted", "quartic")]
    cols += ["speedup", "max_abs_diff", "lu_ms"]
    print(" ".join(f"{c:>18}" for c in cols))
    for n in args.n_sub:
        r = bench(n, args.repeat, backends)
        if "cython" in backends:
            r["speedup"] = r["python_weighted_ms"] / r["cython_weighted_ms"]
        print(" ".join(f"{r.get(c, float('nan')):>18.4g}" if not isinstance(r.get(c), int)
                       else f"{r[c]:>18d}" for c in cols))


if __name__ == "__main__":
    main()
