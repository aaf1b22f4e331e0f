"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--n 800] [--k 6] [--m 10]
       [--j 300] [--repeats 20]
"""

import argparse
import time

import numpy as np

from phasemap import kernels


def time_call(fn, repeats):
    fn()  # warmup (also triggers JIT compilation)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=800, help="log-grid rows")
    ap.add_argument("--k", type=int, default=6, help="basis patterns")
    ap.add_argument("--m", type=int, default=10, help="shift copies")
    ap.add_argument("--j", type=int, default=300, help="samples")
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    w = rng.random((args.n, args.k))
    h = rng.random((args.m, args.k, args.j))
    a = rng.random((args.n, args.j))
    gamma = np.zeros(args.m)
    eps = 1e-12

    def one_iteration():
        r = kernels.reconstruct(w, h)
        q = a / np.maximum(r, eps)
        h2 = kernels.update_h(w, h, q, gamma, eps)
        r = kernels.reconstruct(w, h2)
        q = a / np.maximum(r, eps)
        kernels.update_w(w, h2, q, eps)
        kernels.kl_divergence(a, r, eps)

    cases = {
        "reconstruct": lambda: kernels.reconstruct(w, h),
        "update_h": lambda: kernels.update_h(
            w, h, a / np.maximum(kernels.reconstruct(w, h), eps), gamma, eps
        ),
        "update_w": lambda: kernels.update_w(
            w, h, a / np.maximum(kernels.reconstruct(w, h), eps), eps
        ),
        "kl_divergence": lambda: kernels.kl_divergence(a, kernels.reconstruct(w, h), eps),
        "full iteration": one_iteration,
    }

    print(f"problem: N={args.n} K={args.k} M={args.m} J={args.j}, {args.repeats} repeats")
    backends = kernels.available_backends()
    results = {}
    for name in backends:
        kernels.set_backend(name)
        results[name] = {case: time_call(fn, args.repeats) for case, fn in cases.items()}

    header = f"{'kernel':<16}" + "".join(f"{b + ' (ms)':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case in cases:
        row = f"{case:<16}"
        for b in backends:
            row += f"{results[b][case] * 1e3:>14.3f}"
        if len(backends) == 2:
            a_, b_ = (results[b][case] for b in backends)
            row += f"{max(a_, b_) / min(a_, b_):>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
