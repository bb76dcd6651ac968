#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against their pure-Python fallbacks.

The two paths are bit-identical (tests/test_kernels.py); this script only
measures speed. Run:

    python benchmarks/bench_kernels.py [--n 200000]

BICACOMP_NUMBA=0 would disable compilation package-wide; here we reach both
paths directly so one process can time the comparison.
"""

import argparse
import time

import numpy as np

from bicacomp import kernels
from bicacomp.coding import quantize_counts


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_coder(n):
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(256) * 0.5)
    syms = rng.choice(256, size=n, p=p).astype(np.int64)
    counts = quantize_counts(p)
    cum = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=cum[1:])
    out = np.zeros(n * 20 + 128, dtype=np.uint8)

    nb = kernels.ac_encode(syms, cum, out)  # also triggers compilation
    bits = out[:nb].copy()
    dec = np.zeros(n, dtype=np.int64)

    rows = []
    t_jit = timeit(lambda: kernels.ac_encode(syms, cum, out))
    t_py = timeit(lambda: kernels._ac_encode_core(syms, cum, out), repeats=1)
    rows.append(("arithmetic encode", t_py, t_jit))
    kernels.ac_decode(bits, n, cum, dec)
    t_jit = timeit(lambda: kernels.ac_decode(bits, n, cum, dec))
    t_py = timeit(lambda: kernels._ac_decode_core(bits, n, cum, dec), repeats=1)
    rows.append(("arithmetic decode", t_py, t_jit))
    return rows


def bench_assign(n):
    rng = np.random.default_rng(2)
    x = rng.standard_normal((n // 10, 6))
    cents = rng.standard_normal((64, 6))
    bias = rng.random(64)
    assign = np.zeros(x.shape[0], dtype=np.int64)
    kernels.ecvq_assign(x, cents, bias, assign)
    t_jit = timeit(lambda: kernels.ecvq_assign(x, cents, bias, assign))
    t_py = timeit(lambda: kernels._ecvq_assign_core(x, cents, bias, assign), repeats=1)
    return [("quantizer assignment", t_py, t_jit)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200000, help="symbols to code")
    args = ap.parse_args()

    print(f"numba active: {kernels.NUMBA_ACTIVE}   workload n={args.n}")
    rows = bench_coder(args.n) + bench_assign(args.n)
    print(f"{'kernel':<24}{'python':>12}{'numba':>12}{'speedup':>10}")
    for name, t_py, t_jit in rows:
        print(f"{name:<24}{t_py:>11.4f}s{t_jit:>11.4f}s{t_py / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
