#!/usr/bin/env python3
"""Timing comparison of the two simplex kernels.

The pivot loop exists twice -- numba-compiled and plain numpy -- selected at
runtime (see morphbox._backend).  This script runs identical LP instances
through both and reports per-solve wall times.  Two workloads:

  random   synthetic bounded LPs of growing size
  trainer  subproblems assembled from a blob dataset, the exact shape the
           solver sees during CCP training

Usage:
    python3 benchmarks/bench_lp.py
    python3 benchmarks/bench_lp.py --repeats 5 --seed 3
"""

import argparse
import time

import numpy as np

from morphbox._backend import numba_available
from morphbox.data import apply_scaler, fit_scaler, make_blobs
from morphbox.lp import LpProblem, solve
from morphbox.trainer import (TrainConfig, assemble_subproblem,
                              class_problems, kmeanspp_init)


def random_bounded_lp(rng, n_vars, n_rows):
    A = rng.normal(size=(n_rows, n_vars))
    b = np.abs(rng.normal(size=n_rows)) + 0.1
    A = np.vstack([A, np.ones((1, n_vars))])
    b = np.concatenate([b, [float(rng.uniform(2.0, 10.0))]])
    c = rng.normal(size=n_vars)
    return LpProblem(c=c, A=A, b=b, var_lower=np.zeros(n_vars))


def trainer_lps(seed, boxes_per_class):
    """One CCP subproblem per class of a standardized blob dataset."""
    ds = make_blobs(600, 2, 6, 1.2, 3, seed=seed)
    ds = apply_scaler(ds, fit_scaler(ds))
    cfg = TrainConfig(boxes_per_class=boxes_per_class, gamma=0.01, seed=seed)
    problems = []
    for cp in class_problems(ds.X, ds.y, ds.class_count):
        boxes = kmeanspp_init(cp.positives, boxes_per_class, seed)
        problems.append(assemble_subproblem(cp, boxes, cfg))
    return problems


def time_backend(problems, backend, repeats):
    """Median-of-repeats total seconds for solving the whole batch."""
    totals = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for p in problems:
            s = solve(p, backend=backend)
            assert s.status.name == "OPTIMAL"
        totals.append(time.perf_counter() - t0)
    return float(np.median(totals))


def run(args):
    rng = np.random.default_rng(args.seed)
    workloads = []
    for n_vars, n_rows, count in ((10, 20, 40), (30, 60, 20), (60, 120, 10)):
        batch = [random_bounded_lp(rng, n_vars, n_rows) for _ in range(count)]
        workloads.append((f"random {n_vars}v x {n_rows + 1}r x{count}", batch))
    for K in (2, 4):
        batch = trainer_lps(args.seed, K)
        shape = f"{batch[0].n_rows}r/{batch[0].n_vars}v"
        workloads.append((f"trainer K={K} ({shape}) x{len(batch)}", batch))

    backends = ["numpy"]
    if numba_available():
        backends.insert(0, "numba")
        t0 = time.perf_counter()
        solve(workloads[0][1][0], backend="numba")
        print(f"numba warm-up (includes JIT compile): "
              f"{time.perf_counter() - t0:.2f} s\n")
    else:
        print("numba not importable; timing the numpy kernel only\n")

    width = max(len(name) for name, _ in workloads)
    header = f"{'workload'.ljust(width)}  " + "  ".join(
        f"{b + ' (s)':>12}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, batch in workloads:
        times = [time_backend(batch, b, args.repeats) for b in backends]
        row = f"{name.ljust(width)}  " + "  ".join(f"{t:>12.4f}" for t in times)
        if len(times) == 2:
            row += f"  {times[1] / times[0]:>8.1f}x"
        print(row)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats per workload (median reported)")
    ap.add_argument("--seed", type=int, default=0)
    run(ap.parse_args())


if __name__ == "__main__":
    main()
