"""Timing comparison of the warp kernel backends.

Runs the multilinear warp (with and without spatial gradients) on a few
representative grid sizes and reports the best-of-N wall time per call for
every backend that imported, plus the numeric agreement between them.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--seed S]
"""

import argparse
import time

import numpy as np

from roireg._kernels import available_backends, get_backend

WORKLOADS = [
    ("2D 64x64", (64, 64)),
    ("2D 256x256", (256, 256)),
    ("3D 32x32x32", (32, 32, 32)),
    ("3D 64x64x64", (64, 64, 64)),
]


def make_inputs(rng, dims):
    grid = rng.random(dims)
    disp = rng.uniform(-3.0, 3.0, size=(len(dims),) + dims)
    return np.ascontiguousarray(grid), np.ascontiguousarray(disp)


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repetitions per cell (best is kept)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = available_backends()
    rng = np.random.default_rng(args.seed)
    print(f"backends: {', '.join(backends)}")
    header = f"{'workload':<14} {'kernel':<10}"
    for name in backends:
        header += f" {name + ' (ms)':>14}"
    if set(backends) == {"native", "numpy"}:
        header += f" {'native gain':>12} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))

    for label, dims in WORKLOADS:
        grid, disp = make_inputs(rng, dims)
        nd = len(dims)
        for kernel in ("warp", "warp_grad"):
            row = f"{label:<14} {kernel:<10}"
            times = []
            outputs = []
            for name in backends:
                mod = get_backend(name)
                if kernel == "warp":
                    fn = mod.warp2d if nd == 2 else mod.warp3d
                else:
                    fn = mod.warp2d_grad if nd == 2 else mod.warp3d_grad
                times.append(best_of(fn, (grid, disp), args.repeats))
                out = fn(grid, disp)
                outputs.append(out if kernel == "warp" else out[0])
                row += f" {times[-1] * 1e3:>14.3f}"
            if set(backends) == {"native", "numpy"}:
                t_native = times[backends.index("native")]
                t_numpy = times[backends.index("numpy")]
                ratio = t_numpy / t_native if t_native > 0 else float("inf")
                diff = float(np.abs(outputs[0] - outputs[1]).max())
                row += f" {ratio:>11.2f}x {diff:>11.2e}"
            print(row)


if __name__ == "__main__":
    main()
