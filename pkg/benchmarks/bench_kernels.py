#!/usr/bin/env python3
"""Benchmark the compiled coincidence kernels against the NumPy reference.

Generates representative sorted time-tag streams, runs every kernel on each
importable backend, checks that the outputs agree, and reports best-of-N
timings with the compiled/python speedup.

Usage:
    python3 benchmarks/bench_kernels.py [--events 1000000] [--repeats 5] [--seed 7]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bpm_spdc.kernels import BACKEND, available_backends


def sorted_tags(rng: np.random.Generator, n: int, span_ps: int) -> np.ndarray:
    t = rng.uniform(0.0, span_ps, n)
    return np.sort(np.floor(t).astype(np.int64))


def best_of(fn, args, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def equal(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--events", type=int, default=1_000_000,
                        help="events per channel (default: 1e6)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; the best is reported (default: 5)")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    span_ps = 10**12  # one second of tags
    rng = np.random.default_rng(args.seed)
    s = sorted_tags(rng, args.events, span_ps)
    i1 = sorted_tags(rng, args.events // 2, span_ps)
    i2 = sorted_tags(rng, args.events // 2, span_ps)

    cases = [
        ("delay_histogram", (s, np.sort(np.concatenate([i1, i2])), 1000, 100)),
        ("count_pairs_in_window", (s, np.sort(np.concatenate([i1, i2])), 500)),
        ("herald_window_counts", (s, i1, i2, 500)),
        ("dead_time_filter", (s, 10_000)),
    ]

    backends = available_backends()
    print(f"active backend: {BACKEND}; benchmarking: {', '.join(backends)}")
    print(f"{args.events:,} signal events, {args.events // 2:,} per idler channel, "
          f"best of {args.repeats}\n")

    name_w = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{name_w}}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for name, call_args in cases:
        times = {}
        results = {}
        for backend_name, module in backends.items():
            times[backend_name], results[backend_name] = best_of(
                getattr(module, name), call_args, args.repeats
            )
        reference = results["python"]
        for backend_name, result in results.items():
            if not equal(result, reference):
                raise SystemExit(f"backend mismatch in {name}: "
                                 f"{backend_name} disagrees with python")
        row = f"{name:<{name_w}}" + "".join(
            f"{times[b] * 1e3:>11.2f} ms" for b in backends
        )
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
