"""Time the compiled and numpy kernels on random tables.

    python benchmarks/bench_kernels.py --tables 200000 --repeat 5
"""

import argparse
import timeit

import numpy as np

from mafneutral import kernels
from mafneutral.numerics import std_normal_upper_quantile
from mafneutral.stats import Method


def make_tables(n, size, seed):
    rng = np.random.default_rng(seed)
    r0 = rng.binomial(size, 0.04, n)
    r1 = rng.binomial(size - r0, 0.32)
    s0 = rng.binomial(size, 0.04, n)
    s1 = rng.binomial(size - s0, 0.32)
    return r0, r1, size, s0, s1, size


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tables", type=int, default=200_000)
    parser.add_argument("--size", type=int, default=5000, help="individuals per group")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)

    methods = list(kernels.METHOD_CODES)
    codes = [kernels.METHOD_CODES[m] for m in methods]
    params = [{Method.W: 0.05, Method.W_HWD: 0.05, Method.CATT: 0.5}.get(m, 0.0) for m in methods]
    z = std_normal_upper_quantile(0.5e-4)
    crit = [z * z if m is Method.CHI2 else z for m in methods]
    tables = make_tables(args.tables, args.size, args.seed)

    backends = ["numpy"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{args.tables} tables, {len(methods)} statistics each, best of {args.repeat}")
    results = {}
    for name in backends:
        for label, call in (
            ("batch_statistics", lambda: kernels.batch_statistics(*tables, codes, params, backend=name)),
            ("count_rejections", lambda: kernels.count_rejections(*tables, codes, params, crit, backend=name)),
        ):
            best = min(timeit.repeat(call, number=1, repeat=args.repeat))
            results[name, label] = best
            rate = args.tables * len(methods) / best / 1e6
            print(f"  {name:7s} {label:17s} {best * 1e3:9.2f} ms  {rate:7.1f} M stats/s")
    if len(backends) == 2:
        for label in ("batch_statistics", "count_rejections"):
            print(f"  speedup {label}: {results['numpy', label] / results['cython', label]:.1f}x")
    else:
        print("  compiled kernels unavailable; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
