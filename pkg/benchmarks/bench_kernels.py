#!/usr/bin/env python3
"""Benchmark the solver kernels: compiled extension vs pure-Python fallback.

Times the raw pattern-search kernel on synthetic ring instances over a
samples x iterations grid (full iteration budget forced, single-threaded),
prints per-cell times and the speedup, and optionally writes the grid as
CSV/SVG artifacts.

    python3 benchmarks/bench_kernels.py [--full] [--out DIR]

``--full`` widens the grid to samples {4..64} x iterations {10..1000}.
"""

import argparse
import math
import sys
import time
from array import array
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from proxileak.mlat._backend import available_backends  # noqa: E402


def instance(n):
    xs = array("d", (1000.0 * math.cos(2.0 * math.pi * i / n) for i in range(n)))
    ys = array("d", (1000.0 * math.sin(2.0 * math.pi * i / n) for i in range(n)))
    ds = array("d", (100.0 * math.floor(
        math.hypot(xs[i] - 137.0, ys[i] + 42.0) / 100.0) for i in range(n)))
    return xs, ys, ds


def time_solve(impl, xs, ys, ds, iters, min_time_s=0.02):
    repeats = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(repeats):
            impl.solve_pattern(xs, ys, ds, 0.0, 0.0, 500.0, 0.0, iters, 0)
        elapsed = time.perf_counter() - t0
        if elapsed >= min_time_s or repeats >= 1 << 22:
            return elapsed / repeats
        repeats *= 2


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true",
                        help="wider grid: samples 4..64, iterations 10..1000")
    parser.add_argument("--out", help="write runtime_grid CSV/SVG per backend")
    args = parser.parse_args(argv)

    if args.full:
        sample_counts = [4, 8, 16, 32, 64]
        iteration_counts = [10, 50, 100, 500, 1000]
    else:
        sample_counts = [10, 100, 1000]
        iteration_counts = [10, 100, 1000]

    backends = available_backends()
    if "compiled" not in backends:
        print("note: compiled kernels not built; timing the fallback only",
              file=sys.stderr)

    grids = {}
    for name, impl in backends.items():
        rows = []
        for n in sample_counts:
            xs, ys, ds = instance(n)
            for iters in iteration_counts:
                rows.append((n, iters, time_solve(impl, xs, ys, ds, iters)))
        grids[name] = rows

    header = f"{'samples':>8} {'iters':>6}"
    for name in grids:
        header += f" {name + ' [us]':>18}"
    if len(grids) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for idx in range(len(next(iter(grids.values())))):
        n, iters, _ = grids[next(iter(grids))][idx]
        line = f"{n:>8} {iters:>6}"
        times = []
        for name in grids:
            t = grids[name][idx][2]
            times.append(t)
            line += f" {t * 1e6:>18.2f}"
        if len(times) == 2:
            line += f" {times[0] / times[1] if times[1] else 0:>8.1f}x" \
                if list(grids) == ["pure-python", "compiled"] \
                else f" {times[1] / times[0]:>8.1f}x"
        print(line)

    if args.out:
        from proxileak import report

        for name, rows in grids.items():
            out = Path(args.out) / name
            paths = report.write_runtime_grid(rows, out)
            print(f"{name}: wrote {', '.join(str(p) for p in paths)}")


if __name__ == "__main__":
    main()
