"""Wall-clock scaling of the spectral solve, demonstrating n log n behavior."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .fields import Field
from .kernels import KernelCache, default_cache
from .solver import SolverConfig, solve_laplacian


@dataclass(frozen=True)
class BenchRecord:
    size: int
    n: int
    wall_time: float  # median seconds over the repeats
    repeats: int

    def __post_init__(self):
        if self.wall_time <= 0:
            raise ValueError("wall_time must be positive")
        if self.repeats < 3:
            raise ValueError("at least 3 repeats required")


def run_bench(sizes, repeats: int = 5, pad: int = 4,
              cache: KernelCache | None = None) -> list[BenchRecord]:
    """Time solve_laplacian per size with a warm kernel cache.

    Repeats are interleaved round-robin across the sizes so a slow machine
    epoch spreads over all of them instead of skewing one median.
    """
    if repeats < 3:
        raise ValueError("at least 3 repeats required")
    if cache is None:
        cache = default_cache()
    cfg = SolverConfig(pad=pad)
    rng = np.random.default_rng(12345)
    fields = {}
    for size in sizes:
        size = int(size)
        if size < 8:
            raise ValueError(f"bench sizes must be >= 8, got {size}")
        fields[size] = Field(rng.standard_normal((1, 1, size, size)))
        solve_laplacian(fields[size], cfg, cache)  # warm: builds and caches the kernel
    times: dict[int, list[float]] = {size: [] for size in fields}
    for _ in range(repeats):
        for size, field in fields.items():
            t0 = time.perf_counter()
            solve_laplacian(field, cfg, cache)
            times[size].append(time.perf_counter() - t0)
    return [BenchRecord(size=size, n=size * size,
                        wall_time=float(np.median(times[size])), repeats=repeats)
            for size in fields]


def write_csv(records: list[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "n", "median_seconds"])
        for r in records:
            writer.writerow([r.size, r.n, f"{r.wall_time:.9f}"])
