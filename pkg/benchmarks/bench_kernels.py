"""Benchmark the numba kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [--splats N] [--size HxW] [--reps R]

The engine picks its backend from FORGE_BACKEND at import time; this script
imports both implementations directly and times them on identical inputs.
"""

import argparse
import time

import numpy as np

from sceneforge.kernels import numba_impl, numpy_impl


def make_inputs(rng, n, h, w):
    mean2d = np.column_stack([rng.uniform(0, w, n), rng.uniform(0, h, n)])
    a = rng.uniform(0.05, 0.6, n)
    c = rng.uniform(0.05, 0.6, n)
    b = rng.uniform(-1, 1, n) * np.sqrt(a * c) * 0.7
    invcov = np.column_stack([a, b, c])
    opacity = rng.uniform(0.2, 0.95, n)
    color = rng.random((n, 3))
    depthz = rng.uniform(1, 6, n)
    order = np.argsort(depthz, kind="stable")
    bboxes = np.tile(np.array([0, w - 1, 0, h - 1]), (n, 1)).astype(np.int64)
    return order, mean2d, invcov, opacity, color, depthz, bboxes


def bench(fn, args, reps):
    fn(*args)  # warm-up (JIT compile for numba)
    start = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - start) / reps


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--splats", type=int, default=500)
    parser.add_argument("--size", default="64x64")
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args()
    h, w = (int(v) for v in args.size.split("x"))
    rng = np.random.default_rng(0)

    inputs = make_inputs(rng, args.splats, h, w)
    d_rgb = rng.standard_normal((h, w, 3))
    d_depth = rng.standard_normal((h, w))

    pts_u = rng.uniform(0, w, 5000)
    pts_v = rng.uniform(0, h, 5000)
    pts_z = rng.uniform(0.5, 5, 5000)
    pts_c = rng.random((5000, 3))

    rows = []
    for label, impl in (("numba", numba_impl), ("numpy", numpy_impl)):
        fwd = bench(impl.splat_forward, (*inputs, h, w), args.reps)
        bwd = bench(impl.splat_backward, (*inputs, d_rgb, d_depth), args.reps)
        zbuf = bench(impl.points_zbuffer, (pts_u, pts_v, pts_z, pts_c, h, w, 1.0),
                     args.reps)
        rows.append((label, fwd, bwd, zbuf))

    print(f"\n{args.splats} splats, {w}x{h} px, {args.reps} reps (seconds/call)")
    print(f"{'backend':<8} {'splat_forward':>14} {'splat_backward':>15} {'points_zbuffer':>15}")
    for label, fwd, bwd, zbuf in rows:
        print(f"{label:<8} {fwd:>14.5f} {bwd:>15.5f} {zbuf:>15.5f}")
    base, test = rows[1], rows[0]
    print(f"{'speedup':<8} {base[1] / test[1]:>13.1f}x {base[2] / test[2]:>14.1f}x "
          f"{base[3] / test[3]:>14.1f}x")


if __name__ == "__main__":
    main()
