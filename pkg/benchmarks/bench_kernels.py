"""Compare the compiled and NumPy kernel backends.

Usage: python benchmarks/bench_kernels.py [--cells 50 200 1000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from plaplog import kernels
from plaplog.domain import Params, make_grid, profile


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(M):
    P = Params(2.0, 3.0, 3, 1.0)
    g = make_grid(P, M)
    u = profile(g, "eigen", 1.0).values
    arrays = (g.volumes, g.weighted_volumes(P.s), g.face_volumes, g.face_spacing)
    p, q = P.p, P.q
    return {
        "integrals": lambda b: b.integrals(u, *arrays, p, q),
        "step": lambda b: b.step(u, 1e-4, *arrays, p, q, 1.0, True),
        "advance x1000": lambda b: b.advance(u.copy(), 0.0, 1000, 1e-4, 1e9, 1e-13, np.inf,
                                             *arrays, p, q, 1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[50, 200, 1000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled is None:
        print("compiled extension not built; only the NumPy fallback is timed")
    print(f"{'kernel':<14} {'cells':>6} {'python [s]':>12} {'cython [s]':>12} {'speedup':>8}")
    for M in args.cells:
        for name, fn in cases(M).items():
            tp = best_of(lambda: fn(kernels.fallback), args.repeat)
            if kernels.compiled is None:
                print(f"{name:<14} {M:>6} {tp:>12.3e} {'-':>12} {'-':>8}")
                continue
            tc = best_of(lambda: fn(kernels.compiled), args.repeat)
            print(f"{name:<14} {M:>6} {tp:>12.3e} {tc:>12.3e} {tp / tc:>8.1f}")


if __name__ == "__main__":
    main()
