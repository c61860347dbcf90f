"""Wall-clock breakdown of kernel time into the categories reported by the benchmarks."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields

CATEGORIES = ("matmul", "krp_full", "krp_partial", "matvec", "reduce", "reorder", "other")

now = time.perf_counter


@dataclass
class Breakdown:
    matmul: float = 0.0
    krp_full: float = 0.0
    krp_partial: float = 0.0
    matvec: float = 0.0
    reduce: float = 0.0
    reorder: float = 0.0
    other: float = 0.0
    total: float = 0.0

    def add(self, category: str, seconds: float):
        setattr(self, category, getattr(self, category) + seconds)

    @contextmanager
    def time(self, category: str):
        t0 = now()
        try:
            yield
        finally:
            self.add(category, now() - t0)

    def absorb_parallel(self, wall: float, parts):
        """Charge ``wall`` seconds of a threaded region to categories.

        Each worker's per-category times are summed and the region's wall time
        is split in the same proportions.
        """
        sums = {c: sum(getattr(p, c) for p in parts) for c in CATEGORIES}
        busy = sum(sums.values())
        if busy <= 0:
            self.other += wall
            return
        for c in CATEGORIES:
            self.add(c, wall * sums[c] / busy)

    def categorized(self) -> float:
        return sum(getattr(self, c) for c in CATEGORIES)

    def finish(self, total: float):
        """Set the total and book any untracked time as ``other``."""
        self.total = total
        gap = total - self.categorized()
        if gap > 0:
            self.other += gap
        return self

    def as_dict(self) -> dict:
        return asdict(self)

    def __add__(self, other: Breakdown) -> Breakdown:
        return Breakdown(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                            for f in fields(self)})
