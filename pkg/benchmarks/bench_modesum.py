"""Benchmark the compiled mode-sum kernel against the numpy fallback.

Run:  python benchmarks/bench_modesum.py [--paths N] [--threads T]

The Horner evaluation of the per-step drift over all paths dominates the
runtime of every scheme experiment, so this is the comparison that decides
whether building the extension is worth it on a given machine.
"""

import argparse
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from sbe import _modesum as ms  # noqa: E402


def bench(fn, *args, repeats=5):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--threads", type=int, default=2)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.normal(size=args.paths) * 30.0
    print(f"compiled extension available: {ms.HAVE_COMPILED}")
    print(f"{'modes':>6} {'numpy':>12} {'cython(1)':>12} "
          f"{'cython({0})':>12} {'speedup':>8}".format(args.threads))
    for kmax in (16, 64, 128, 256, 512):
        w = (rng.normal(size=kmax + 1) + 1j * rng.normal(size=kmax + 1))
        w *= np.arange(1, kmax + 2, dtype=float) ** -0.9
        t_np = bench(ms.mode_sum_1d_numpy, x, w, 4.0)
        if ms.HAVE_COMPILED:
            t_c1 = bench(ms.mode_sum_1d_cython, x, w, 4.0, 1)
            t_cn = bench(ms.mode_sum_1d_cython, x, w, 4.0, args.threads)
            a = ms.mode_sum_1d_numpy(x, w, 4.0)
            b = ms.mode_sum_1d_cython(x, w, 4.0, args.threads)
            assert np.max(np.abs(a - b)) < 1e-11 * max(1.0, np.abs(a).max())
            print(f"{kmax:6d} {t_np*1e3:10.2f}ms {t_c1*1e3:10.2f}ms "
                  f"{t_cn*1e3:10.2f}ms {t_np/t_cn:7.2f}x")
        else:
            print(f"{kmax:6d} {t_np*1e3:10.2f}ms {'-':>12} {'-':>12}")


if __name__ == "__main__":
    main()
