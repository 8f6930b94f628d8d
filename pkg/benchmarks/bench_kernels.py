"""Compare the compiled and numpy paths of the explicit stepper and the Laplacian.

    python benchmarks/bench_kernels.py [--dx 0.05] [--steps 200] [--repeat 3]

Both twins are called directly, so the FRONTBLOCK_NUMBA switch is not needed here.
"""
import argparse
import time

import numpy as np

from frontblock import geometry as geo
from frontblock import kernels
from frontblock.grid import Grid
from frontblock.nonlinearity import make_cubic


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dx", type=float, default=0.05)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    g = Grid.build(geo.funnel_down(truncation=(-30.0, 10.0)), args.dx)
    b = make_cubic(0.25)
    free = g.free_mask()
    dt = 0.9 * args.dx**2 / 4
    inv = 1.0 / args.dx**2
    rng = np.random.default_rng(0)
    u0 = rng.random(g.n)
    work = np.empty(g.n)
    out = np.empty(g.n)

    def advance(fn):
        u = u0.copy()
        return lambda: fn(u, g.nbr, free, dt, inv, b.xs, b.coef, args.steps, work)

    # warm up the JIT and check the twins agree before timing
    ua, ub = u0.copy(), u0.copy()
    kernels._advance_nb(ua, g.nbr, free, dt, inv, b.xs, b.coef, 10, work)
    kernels._advance_np(ub, g.nbr, free, dt, inv, b.xs, b.coef, 10, work)
    diff = float(np.max(np.abs(ua - ub)))
    kernels._laplacian_nb(u0, g.nbr, inv, out)

    rows = [
        ("advance", best_of(advance(kernels._advance_nb), args.repeat),
         best_of(advance(kernels._advance_np), args.repeat), args.steps),
        ("laplacian", best_of(lambda: kernels._laplacian_nb(u0, g.nbr, inv, out), args.repeat * 20),
         best_of(lambda: kernels._laplacian_np(u0, g.nbr, inv, out), args.repeat * 20), 1),
    ]
    print(f"grid: {g.n} cells at dx = {args.dx}; twin difference after 10 steps: {diff:.1e}")
    print(f"{'kernel':<10} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'ns/cell/step (numba)':>22}")
    for name, t_nb, t_np, k in rows:
        print(f"{name:<10} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {1e9 * t_nb / (g.n * k):22.2f}")


if __name__ == "__main__":
    main()
