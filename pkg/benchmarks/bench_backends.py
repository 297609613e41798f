"""Throughput comparison of the likelihood-solver backends.

Runs the same batched ball-constrained Newton solve through the
compiled kernel and the numpy fallback, then times a full Monte Carlo
ensemble (sampling + estimation) for context.

Usage: python benchmarks/bench_backends.py [--records 20000] [--shots 30]
"""

import argparse
import time

import numpy as np

from tomolab import _mlkernel_py
from tomolab.analysis import run_trials
from tomolab.sampling import ProtocolTag, SeedSpec, sample_continuous

try:
    from tomolab import _mlkernel as compiled
except ImportError:
    compiled = None


def build_batch(n_records, n_shots, seed=123):
    rng = np.random.default_rng(seed)
    obs = np.empty((n_records, n_shots, 3))
    for i in range(n_records):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        r0 = direction * rng.random() ** (1.0 / 3.0)
        obs[i] = sample_continuous(r0, n_shots, SeedSpec(seed, i)).outcomes
    moments = 3.0 * obs.mean(axis=1)
    norms = np.linalg.norm(moments, axis=1)
    scale = np.where(norms > 0.9, 0.9 / np.maximum(norms, 1e-300), 1.0)
    return obs, moments * scale[:, None]


def time_kernel(kernel, obs, x0, repeats=3):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        xs, conv, _, _, _ = kernel.solve_batch(obs, x0, 1e-12, 1e-10, 100, 0.5)
        best = min(best, time.perf_counter() - start)
        assert conv.all()
    return best, xs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=20_000)
    parser.add_argument("--shots", type=int, default=30)
    args = parser.parse_args()

    print(f"building {args.records} records x {args.shots} shots ...")
    obs, x0 = build_batch(args.records, args.shots)

    py_time, py_x = time_kernel(_mlkernel_py, obs, x0)
    rate_py = args.records / py_time
    print(f"python kernel : {py_time:8.3f} s  ({rate_py:10.0f} solves/s)")

    if compiled is None:
        print("compiled kernel: not built (pip install -e . rebuilds it)")
    else:
        cy_time, cy_x = time_kernel(compiled, obs, x0)
        rate_cy = args.records / cy_time
        gap = float(np.abs(py_x - cy_x).max())
        print(f"cython kernel : {cy_time:8.3f} s  ({rate_cy:10.0f} solves/s)")
        print(f"speedup       : {py_time / cy_time:8.1f}x   (max result gap {gap:.2e})")

    start = time.perf_counter()
    run_trials(
        ProtocolTag.CONTINUOUS_ML,
        np.array([0.0, 0.0, 0.6]),
        args.shots,
        min(args.records, 5_000),
        SeedSpec(7),
    )
    elapsed = time.perf_counter() - start
    print(
        f"end-to-end    : {elapsed:8.3f} s for "
        f"{min(args.records, 5_000)} ml trials (active backend)"
    )


if __name__ == "__main__":
    main()
