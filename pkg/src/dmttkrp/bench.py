"""Benchmark drivers: timed MTTKRP, KRP and CP-ALS runs with CSV output.

Every timed configuration is preceded by one untimed warm-up run. MTTKRP and
CP-ALS timings report the median over trials by default; KRP timings the mean.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .cp_als import AlsConfig, als_iterate, random_model
from .kernels import MttkrpRequest, is_external, normalize_name, run
from .khatri_rao import HadamardCounter, krp, krp_naive
from .oracle import MAX_ORACLE_ENTRIES, mttkrp_loops_oracle
from .tensor import DenseTensor
from .timing import CATEGORIES, Breakdown, now

CHECK_RTOL = 1e-10

FULL_PRESETS = {
    "fmri3d": (225, 59, 19900),
    "fmri4d": (225, 59, 200, 200),
    "cube3": (900,) * 3,
    "cube4": (165,) * 4,
    "cube5": (60,) * 5,
    "cube6": (30,) * 6,
}
DESK_ENTRIES = 10**6


def desk_dims(dims, target: int = DESK_ENTRIES) -> tuple[int, ...]:
    """Shrink ``dims`` uniformly to at most ``target`` entries, keeping aspect ratios."""
    s = (target / prod(dims)) ** (1.0 / len(dims))
    out = tuple(max(1, round(d * s)) for d in dims)
    if prod(out) > target:
        # Stay within the target so --check can always use the oracle.
        out = tuple(max(1, int(d * s)) for d in dims)
    return out


DESK_PRESETS = {name: desk_dims(d) for name, d in FULL_PRESETS.items()}


def preset_dims(name: str, scale: str = "desk") -> tuple[int, ...]:
    table = {"desk": DESK_PRESETS, "full": FULL_PRESETS}[scale]
    return table[name]


MTTKRP_COLUMNS = ["dims", "rank", "mode", "algo", "order", "threads", "trials", "stat",
                  *CATEGORIES, "total", "check_error"]
KRP_COLUMNS = ["dims", "rank", "algo", "threads", "trials", "stat", "seconds", "hadamards"]
CP_COLUMNS = ["dims", "rank", "iteration", "mode", "algo", "threads",
              *CATEGORIES, "total", "fit"]


class CheckFailed(RuntimeError):
    """A timed result disagreed with the brute-force reference."""


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    if isinstance(value, tuple):
        return "x".join(str(v) for v in value)
    return str(value)


@dataclass
class BenchRecord:
    dims: tuple
    rank: int
    mode: int
    algo: str
    order: str
    threads: int
    trials: int
    stat: str
    breakdown: Breakdown = field(default_factory=Breakdown)
    check_error: float | None = None

    def row(self) -> list[str]:
        bd = self.breakdown
        return [fmt(v) for v in (self.dims, self.rank, self.mode, self.algo, self.order,
                                 self.threads, self.trials, self.stat,
                                 *(getattr(bd, c) for c in CATEGORIES), bd.total,
                                 self.check_error)]


def summarize(values, stat: str) -> float:
    if stat == "median":
        return float(statistics.median(values))
    if stat == "mean":
        return float(statistics.fmean(values))
    raise ValueError(f"unknown statistic {stat!r}")


def summarize_breakdowns(bds, stat: str) -> Breakdown:
    out = Breakdown()
    for name in (*CATEGORIES, "total"):
        setattr(out, name, summarize([getattr(b, name) for b in bds], stat))
    return out


def random_factors(dims, rank, seed=None):
    rng = np.random.default_rng(seed)
    return [rng.random((d, rank)) for d in dims]


def relative_error(M, ref) -> float:
    denom = np.linalg.norm(ref)
    diff = np.linalg.norm(M - ref)
    return float(diff / denom) if denom > 0 else float(diff)


def bench_mttkrp(tensor: DenseTensor, rank: int, modes=None, algos=("baseline", "one_step", "two_step"),
                 threads=(1,), trials: int = 10, stat: str = "median", order: str = "auto",
                 seed=None, check: bool = False) -> list[BenchRecord]:
    """Time every (algo, mode, threads) combination.

    Two-step is skipped on external modes. With ``check`` each result is
    compared to the brute-force reference (tensors up to 10^6 entries) and
    :class:`CheckFailed` is raised on a mismatch.
    """
    factors = random_factors(tensor.dims, rank, seed)
    modes = range(tensor.ndim) if modes is None else modes
    references = {}
    records = []
    for algo in (normalize_name(a) for a in algos):
        for n in modes:
            if algo == "two_step" and is_external(tensor.shape, n):
                continue
            for T in threads:
                req = MttkrpRequest(tensor, factors, n, T, algo, order)
                run(req)
                results = [run(req) for _ in range(trials)]
                rec = BenchRecord(tensor.dims, rank, n, algo,
                                  results[0].order or "-", T, trials, stat,
                                  summarize_breakdowns([r.breakdown for r in results], stat))
                if check and tensor.size <= MAX_ORACLE_ENTRIES:
                    if n not in references:
                        references[n] = mttkrp_loops_oracle(tensor, factors, n)
                    err = max(relative_error(r.M, references[n]) for r in results)
                    rec.check_error = err
                    if not err <= CHECK_RTOL:
                        raise CheckFailed(
                            f"{algo} mode {n} threads {T}: relative error {err:.3g} "
                            f"exceeds {CHECK_RTOL:g}")
                records.append(rec)
    return records


def bench_krp(row_counts, rank: int, threads=(1,), trials: int = 100, stat: str = "mean",
              algos=("reuse", "naive"), seed=None) -> list[list[str]]:
    mats = random_factors(row_counts, rank, seed)
    fns = {"reuse": krp, "naive": krp_naive}
    rows = []
    for algo in algos:
        for T in threads:
            counter = HadamardCounter()
            fns[algo](mats, T, counter)
            times = []
            for _ in range(trials):
                t0 = now()
                fns[algo](mats, T)
                times.append(now() - t0)
            rows.append([fmt(v) for v in (tuple(row_counts), rank, algo, T, trials, stat,
                                          summarize(times, stat), counter.count)])
    return rows


def bench_cp(tensor: DenseTensor, ranks, iters: int = 1, threads: int = 1, algo="auto",
             order: str = "auto", seed=None) -> list[list[str]]:
    """Per-iteration, per-mode CP-ALS timing with a summary row per iteration."""
    rows = []
    for rank in ranks:
        config = AlsConfig(max_iters=iters, tol=0.0, seed=seed, threads=threads,
                           algo=algo, order=order)
        model = random_model(tensor.dims, rank, seed)
        xnorm_sq = tensor.norm() ** 2
        for it in range(iters):
            model, rec = als_iterate(tensor, model, config, it, xnorm_sq)
            for n, (bd, name) in enumerate(zip(rec.mode_times, rec.algos)):
                rows.append([fmt(v) for v in (tensor.dims, rank, it, n, name, threads,
                                              *(getattr(bd, c) for c in CATEGORIES),
                                              bd.total, None)])
            total = sum(rec.mode_times, Breakdown())
            rows.append([fmt(v) for v in (tensor.dims, rank, it, "all", "-", threads,
                                          *(getattr(total, c) for c in CATEGORIES),
                                          rec.seconds, rec.fit)])
    return rows


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
