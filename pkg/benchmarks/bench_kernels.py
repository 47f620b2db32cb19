#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot primitives (duration bisection, slot-corridor taut walk,
accumulate-and-dump trial loop) plus an end-to-end batch of offline solves,
under both backends. Run:  python benchmarks/bench_kernels.py
"""

import math
import random
import time

import numpy as np

from ehsched import _kernels_py

try:
    from ehsched import _ckernels
except ImportError:
    _ckernels = None

from ehsched.offline_single import solve_off
from ehsched.profiles import TxHarvestProfile
from ehsched.rate import AWGN, max_bits

SUP = 0.5 / math.log(2.0)


def bench(label, fn, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    print(f"  {label:<28s} {best * 1e3:9.2f} ms")
    return best


def duration_workload(mod):
    rng = np.random.Generator(np.random.PCG64(0))
    es = rng.uniform(0.01, 100.0, 20000)
    bs = rng.uniform(0.01, 0.99, 20000) * es * SUP

    def run():
        solve = mod.awgn_solve_duration
        for e, b in zip(es, bs):
            solve(e, b)

    return run


def taut_workload(mod):
    rng = np.random.Generator(np.random.PCG64(1))
    cums = []
    for _ in range(400):
        draws = np.minimum(rng.exponential(24.7, 150), 115.0)
        cums.append(np.concatenate([[0.0], np.cumsum(draws)]))

    def run():
        taut = mod.taut_max_bits
        for cum in cums:
            taut(cum, 115.0, 5.0)

    return run


def ad_workload(mod):
    rng = np.random.Generator(np.random.PCG64(2))
    batches = [np.minimum(rng.exponential(24.7, 4000), 115.0) for _ in range(200)]

    def run():
        trial = mod.ad_trial
        for draws in batches:
            trial(draws, 115.0 / 5.07, 115.0, 5.0, 500.0)

    return run


def offline_batch():
    rng = random.Random(3)
    instances = []
    for _ in range(300):
        n = rng.randint(2, 8)
        t, arr = 0.0, []
        for _ in range(n):
            arr.append((t, max(rng.uniform(0.0, 1.0), 1e-9)))
            t += max(rng.uniform(0.0, 1.0), 1e-9)
        tx = TxHarvestProfile.from_arrivals(arr)
        gamma0 = rng.uniform(0.5, 3.0)
        b0 = rng.uniform(0.05, 0.95) * max_bits(AWGN, tx.total, gamma0)
        instances.append((tx, gamma0, b0))

    def run():
        for tx, gamma0, b0 in instances:
            solve_off(tx, b0, gamma0, AWGN)

    return run


def main():
    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("compiled", _ckernels))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    results = {}
    for name, mod in backends:
        print(f"backend: {name}")
        results[name, "duration-solver x20k"] = bench("duration-solver x20k", duration_workload(mod))
        results[name, "taut-walk 150-slot x400"] = bench("taut-walk 150-slot x400", taut_workload(mod))
        results[name, "ad-trial 500-bit x200"] = bench("ad-trial 500-bit x200", ad_workload(mod))

    # end-to-end: whichever backend ehsched.kernels selected (set
    # EHSCHED_KERNELS=python before launching to time the fallback)
    from ehsched import kernels

    print(f"end-to-end (selected backend: {kernels.BACKEND})")
    bench("offline solves x300", offline_batch())

    if _ckernels is not None:
        print("speedups (python / compiled):")
        for key in ("duration-solver x20k", "taut-walk 150-slot x400", "ad-trial 500-bit x200"):
            s = results["python", key] / results["compiled", key]
            print(f"  {key:<28s} {s:8.1f}x")


if __name__ == "__main__":
    main()
