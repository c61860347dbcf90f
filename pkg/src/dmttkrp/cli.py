"""Command-line benchmark harness.

Subcommands::

    dmttkrp mttkrp   time MTTKRP algorithms per mode and thread count
    dmttkrp cp       per-iteration CP-ALS timing
    dmttkrp krp      Khatri-Rao product microbenchmark
    dmttkrp gen      write a synthetic tensor file
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager

from . import bench
from .errors import FormatError
from .io import gen_tensor, read_tensor, write_tensor
from .kernels import is_external, normalize_name

THREADS_ENV = "DMTTKRP_NUM_THREADS"
EXIT_CHECK_FAILED = 3


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace("x", ",").split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _tensor_args(p, dims_help="tensor extents, e.g. 100,100,100"):
    p.add_argument("--dims", type=int_list, help=dims_help)
    p.add_argument("--preset", choices=sorted(bench.FULL_PRESETS))
    p.add_argument("--scale", choices=("desk", "full"), default="desk",
                   help="desk presets hold about 10^6 entries (default)")
    p.add_argument("--tensor", metavar="FILE", help="read the tensor from a DNT1 file")
    p.add_argument("--dist", choices=("uniform", "ones"), default="uniform")
    p.add_argument("--seed", type=int, default=0)


def _common(p, stat):
    p.add_argument("--threads", type=int_list, default=None,
                   help=f"thread counts (default ${THREADS_ENV} or all cores)")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--stat", choices=("median", "mean"), default=stat)
    p.add_argument("--out", metavar="FILE.csv", help="write CSV here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmttkrp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mttkrp", help="benchmark MTTKRP algorithms")
    _tensor_args(p)
    _common(p, "median")
    p.add_argument("--rank", type=int, default=25)
    p.add_argument("--mode", type=int, default=None, help="single mode (default: all)")
    p.add_argument("--algo", choices=("baseline", "onestep", "twostep", "all"), default="all")
    p.add_argument("--order", choices=("auto", "left", "right"), default="auto")
    p.add_argument("--check", action="store_true",
                   help="compare each result with the brute-force reference")
    p.set_defaults(func=cmd_mttkrp, subparser=p)

    p = sub.add_parser("cp", help="benchmark CP-ALS iterations")
    _tensor_args(p)
    _common(p, "median")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--ranks", type=int_list, default=None, help="rank sweep, e.g. 10,15,20")
    p.add_argument("--iters", type=int, default=None, help="ALS iterations (default --trials)")
    p.add_argument("--algo", choices=("auto", "onestep", "twostep", "baseline"), default="auto")
    p.add_argument("--order", choices=("auto", "left", "right"), default="auto")
    p.set_defaults(func=cmd_cp, subparser=p)

    p = sub.add_parser("krp", help="benchmark the Khatri-Rao product")
    p.add_argument("--dims", type=int_list, required=True, help="input matrix row counts")
    p.add_argument("--rank", type=int, default=25)
    p.add_argument("--algo", choices=("reuse", "naive", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    _common(p, "mean")
    p.set_defaults(func=cmd_krp, subparser=p)

    p = sub.add_parser("gen", help="write a synthetic tensor file")
    _tensor_args(p)
    p.add_argument("--out", metavar="FILE", required=True)
    p.set_defaults(func=cmd_gen, subparser=p)
    return parser


def load_tensor(args, parser):
    if args.tensor:
        if args.dims or args.preset:
            parser.error("--tensor cannot be combined with --dims or --preset")
        try:
            return read_tensor(args.tensor)
        except (OSError, FormatError) as exc:
            parser.error(str(exc))
    if args.dims and args.preset:
        parser.error("give either --dims or --preset, not both")
    if args.preset:
        dims = bench.preset_dims(args.preset, args.scale)
    elif args.dims:
        dims = args.dims
    else:
        parser.error("one of --dims, --preset or --tensor is required")
    if any(d < 1 for d in dims):
        parser.error(f"extents must be positive: {dims}")
    return gen_tensor(dims, args.seed, args.dist)


@contextmanager
def output(path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f
    else:
        yield sys.stdout


def cmd_mttkrp(args, parser) -> int:
    tensor = load_tensor(args, parser)
    if args.mode is not None and not 0 <= args.mode < tensor.ndim:
        parser.error(f"--mode {args.mode} out of range for a {tensor.ndim}-way tensor")
    if args.algo == "twostep" and args.mode is not None and is_external(tensor.shape, args.mode):
        parser.error(f"--algo twostep is undefined for external mode {args.mode}: "
                     "it degenerates to the 1-step algorithm, use --algo onestep")
    if args.check and tensor.size > bench.MAX_ORACLE_ENTRIES:
        print(f"note: --check skipped, {tensor.size} entries exceeds the oracle limit "
              f"of {bench.MAX_ORACLE_ENTRIES}", file=sys.stderr)
    algos = ("baseline", "onestep", "twostep") if args.algo == "all" else (args.algo,)
    modes = None if args.mode is None else [args.mode]
    try:
        records = bench.bench_mttkrp(
            tensor, args.rank, modes, [normalize_name(a) for a in algos],
            args.threads or [default_threads()], args.trials, args.stat, args.order,
            args.seed, args.check)
    except bench.CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    with output(args.out) as f:
        bench.write_csv(f, bench.MTTKRP_COLUMNS, [r.row() for r in records])
    return 0


def cmd_cp(args, parser) -> int:
    tensor = load_tensor(args, parser)
    if args.ranks and args.rank:
        parser.error("give either --rank or --ranks")
    ranks = args.ranks or [args.rank or 10]
    threads = args.threads or [default_threads()]
    if len(threads) != 1:
        parser.error("cp takes a single --threads value")
    rows = bench.bench_cp(tensor, ranks, args.iters or args.trials, threads[0],
                          normalize_name(args.algo), args.order, args.seed)
    with output(args.out) as f:
        bench.write_csv(f, bench.CP_COLUMNS, rows)
    return 0


def cmd_krp(args, parser) -> int:
    algos = ("reuse", "naive") if args.algo == "both" else (args.algo,)
    rows = bench.bench_krp(args.dims, args.rank, args.threads or [default_threads()],
                           args.trials, args.stat, algos, args.seed)
    with output(args.out) as f:
        bench.write_csv(f, bench.KRP_COLUMNS, rows)
    return 0


def cmd_gen(args, parser) -> int:
    if args.tensor:
        parser.error("gen does not read --tensor")
    write_tensor(args.out, load_tensor(args, parser))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args, args.subparser)


if __name__ == "__main__":
    sys.exit(main())
