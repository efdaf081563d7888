"""Compare the compiled and pure-Python sampling loops.

    python3 benchmarks/bench_sampling.py [--n 200000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from kernelstat import _sampling_py

try:
    from kernelstat import _sampling
except ImportError:
    _sampling = None


def workload(n, outer_size=64, inner_size=32, seed=0):
    rng = np.random.default_rng(seed)
    outer = rng.dirichlet(np.ones(outer_size))
    rows = rng.dirichlet(np.ones(inner_size), size=outer_size)
    outer_cdf = np.cumsum(outer)
    outer_cdf[-1] = 1.0
    row_cdfs = np.cumsum(rows, axis=1)
    row_cdfs[:, -1] = 1.0
    return (np.ascontiguousarray(outer_cdf), np.ascontiguousarray(row_cdfs),
            rng.random(n), rng.random(n))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    outer_cdf, row_cdfs, u1, u2 = workload(args.n)
    impls = [("python", _sampling_py)] + ([("cython", _sampling)] if _sampling else [])
    results = {}
    for name, mod in impls:
        t_inv = min(timeit.repeat(lambda: mod.inverse_cdf(outer_cdf, u1), number=1, repeat=args.repeat))
        t_two = min(timeit.repeat(lambda: mod.two_stage(outer_cdf, row_cdfs, u1, u2), number=1, repeat=args.repeat))
        results[name] = (t_inv, t_two)
        print(f"{name:7s} inverse_cdf {t_inv * 1e3:9.2f} ms   two_stage {t_two * 1e3:9.2f} ms   (n={args.n})")
    if _sampling is None:
        print("compiled extension not built; only the fallback was timed")
        return
    a = _sampling_py.two_stage(outer_cdf, row_cdfs, u1, u2)
    b = _sampling.two_stage(outer_cdf, row_cdfs, u1, u2)
    same = all(np.array_equal(x, y) for x, y in zip(a, b))
    py, cy = results["python"], results["cython"]
    print(f"speedup inverse_cdf x{py[0] / cy[0]:.1f}, two_stage x{py[1] / cy[1]:.1f}; identical indices: {same}")


if __name__ == "__main__":
    main()
