"""Benchmark the compiled kernels against the numpy fallback.

The hot path is the per-batch pairwise distance table plus neighbor
selection and the uncertainty accumulation. Run:

    python benchmarks/bench_kernels.py [--sizes 500,2000,5000] [--dim 64] [--neighbors 5]
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from batchrefine.kernels import _fallback


def load_backends():
    backends = {"fallback": _fallback}
    try:
        backends["native"] = importlib.import_module("batchrefine.kernels._native")
    except ImportError:
        print("native extension not built; benchmarking fallback only")
    return backends


def bench_once(module, x, neighbors, group_ids):
    timings = {}
    start = time.perf_counter()
    table = module.pairwise_euclidean(x)
    timings["pairwise"] = time.perf_counter() - start

    tie_rank = np.arange(x.shape[0], dtype=np.int64)
    start = time.perf_counter()
    idx = module.knn_from_table(table, tie_rank, neighbors)
    timings["knn"] = time.perf_counter() - start

    start = time.perf_counter()
    module.uncertainty_from_table(table, idx, group_ids)
    timings["uncertainty"] = time.perf_counter() - start
    return timings


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="500,2000,5000")
    parser.add_argument("--dim", type=int, default=64)
    parser.add_argument("--neighbors", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    backends = load_backends()
    rng = np.random.default_rng(0)

    header = f"{'n':>6} {'stage':<12}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for n in sizes:
        x = np.ascontiguousarray(rng.normal(size=(n, args.dim)))
        group_ids = np.asarray(np.arange(n) // 5, dtype=np.int64)
        results = {}
        for name, module in backends.items():
            best = None
            for _ in range(args.repeats):
                timings = bench_once(module, x, args.neighbors, group_ids)
                if best is None or sum(timings.values()) < sum(best.values()):
                    best = timings
            results[name] = best
        for stage in ("pairwise", "knn", "uncertainty"):
            row = f"{n:>6} {stage:<12}"
            for name in backends:
                row += f"{results[name][stage] * 1e3:>10.2f}ms"
            if len(backends) == 2:
                ratio = results["fallback"][stage] / max(results["native"][stage], 1e-9)
                row += f"{ratio:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
