"""Time the compiled and NumPy kernels on the same batch of cells and residuals.

    python3 benchmarks/bench_kernels.py [--cells 2000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lips import kernels, reference, select_domain_D


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--grid-n", type=int, default=4001)
    args = ap.parse_args()

    f = reference()
    d = select_domain_D(f)
    rng = np.random.default_rng(0)
    ps = rng.uniform(d.p0, d.p1, args.cells)
    qs = rng.uniform(-d.qmax, d.qmax, args.cells)
    ys = np.linspace(-1.0, 1.0, 200_001)
    fs = f.kernel_spec()

    impls = kernels.implementations()
    results = {}
    print(f"{'kernel':<14}{'impl':<8}{'seconds':>12}")
    for name, impl in impls.items():
        t_res = best_of(lambda: impl.residual(fs, 1.3, 0.2, ys), args.repeat)
        t_cnt = best_of(lambda: impl.count_cells(fs, ps, qs, args.grid_n), args.repeat)
        results[name] = impl.count_cells(fs, ps, qs, args.grid_n)
        print(f"{'residual':<14}{name:<8}{t_res:>12.4f}")
        print(f"{'count_cells':<14}{name:<8}{t_cnt:>12.4f}")
    if len(results) == 2:
        same = all(np.array_equal(results["python"][k], results["cython"][k]) for k in kernels.FIELDS)
        print(f"identical outputs: {same}")


if __name__ == "__main__":
    main()
