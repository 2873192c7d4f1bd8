"""Benchmark the compiled metric kernel against the pure numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--sizes 100,200,400] [--repeats 5]
"""

import argparse
import time

import numpy as np

from maxentnet import _kernels
from maxentnet._kernels import _fallback


def make_instance(n, seed, density=0.4):
    rng = np.random.default_rng(seed)
    w = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    link = rng.random(len(iu[0])) < density
    w[iu] = np.where(link, rng.integers(1, 100, len(iu[0])), 0)
    w += w.T
    adj = (w > 0).astype(np.float64)
    return adj, w, w.sum() / 2.0


def time_fn(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="100,200,400,800")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    try:
        from maxentnet._kernels import _core
    except ImportError:
        _core = None
        print("compiled extension not built; timing fallback only")

    print(f"active backend: {_kernels.BACKEND}")
    header = f"{'n':>6} {'fallback (s)':>14}"
    if _core is not None:
        header += f" {'compiled (s)':>14} {'speedup':>8}"
    print(header)
    for n in sizes:
        adj, w, wtot = make_instance(n, seed=n)
        t_py = time_fn(_fallback.node_metrics, (adj, w, wtot), args.repeats)
        line = f"{n:>6} {t_py:>14.5f}"
        if _core is not None:
            t_c = time_fn(_core.node_metrics, (adj, w, wtot), args.repeats)
            line += f" {t_c:>14.5f} {t_py / t_c:>8.2f}"
            ref = _fallback.node_metrics(adj, w, wtot)
            got = _core.node_metrics(adj, w, wtot)
            for a, b in zip(got, ref):
                np.testing.assert_allclose(a, b, rtol=1e-12, equal_nan=True)
        print(line)


if __name__ == "__main__":
    main()
