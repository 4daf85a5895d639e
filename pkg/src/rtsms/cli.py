"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 malformed input file.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict

import numpy as np

from . import files, gallery, runner
from .tensor import compression_ratio, reconstruct

EXIT_USAGE = 2
EXIT_FORMAT = 3


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def default_seed() -> int:
    return int(os.environ.get("RTSMS_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rtsms", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gallery", help="write a synthetic test tensor")
    g.add_argument("name", help=f"one of {', '.join(gallery.NAMES)} (or 'noisy')")
    g.add_argument("--dims", type=_ints, required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--noise", type=float, default=1e-6)
    g.add_argument("--true-rank", type=int, default=10)
    g.add_argument("--out", required=True)

    c = sub.add_parser("compress", help="compute a Tucker decomposition")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--algorithm", default="rtsms", choices=list(runner.ALGORITHMS))
    c.add_argument("--tol", type=float)
    c.add_argument("--rank", type=_ints)
    c.add_argument("--order", type=_ints, help="1-based processing order, e.g. 1,2,3")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--k", type=int, default=4)
    c.add_argument("--no-refinement", action="store_true")
    c.add_argument("--threshold", action="store_true",
                   help="convert rtsms output to HOSVD form and truncate it")
    c.add_argument("--report")
    c.add_argument("--residual-cap", type=int, default=runner.RESIDUAL_CAP)
    c.add_argument("--no-timings", action="store_true",
                   help="write zero timings so reports are reproducible byte for byte")

    r = sub.add_parser("reconstruct", help="expand a Tucker file to a dense tensor file")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)

    i = sub.add_parser("info", help="print a file header as JSON")
    i.add_argument("--in", dest="inp", required=True)

    n = sub.add_parser("ingest", help="convert a raw binary dump to a tensor file")
    n.add_argument("--raw", required=True)
    n.add_argument("--dtype", choices=["f32", "f64"], default="f64")
    n.add_argument("--dims", type=_ints, required=True)
    n.add_argument("--endian", choices=["le", "be"], default="le")
    n.add_argument("--layout", choices=["F", "C"], default="F",
                   help="F: first index fastest (default); C: last index fastest")
    n.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run a benchmark grid and emit report records")
    b.add_argument("--suite", required=True, choices=["runge", "wagon", "octant", "hilbert", "noisy"])
    b.add_argument("--sizes", type=_ints, required=True)
    b.add_argument("--tols", type=_floats)
    b.add_argument("--ranks", type=_ints, help="uniform ranks r applied to every mode")
    b.add_argument("--algorithms", type=_names, default=["rtsms"])
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--noise", type=float, default=1e-6)
    b.add_argument("--true-rank", type=int, default=10)
    b.add_argument("--out")
    b.add_argument("--no-timings", action="store_true")
    return p


def _fail(code: int, msg: str) -> int:
    print(f"rtsms: error: {msg}", file=sys.stderr)
    return code


def _order(order, d):
    if order is None:
        return None
    zero_based = [o - 1 for o in order]
    if sorted(zero_based) != list(range(d)):
        raise runner.UsageError(f"--order must be a permutation of 1..{d}")
    return zero_based


def cmd_gallery(args) -> int:
    name = "noisy_lowrank" if args.name == "noisy" else args.name
    seed = default_seed() if args.seed is None else args.seed
    try:
        spec = gallery.GallerySpec(name, tuple(args.dims), seed, args.noise, args.true_rank)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    files.write_tensor(args.out, gallery.make(spec))
    return 0


def cmd_compress(args) -> int:
    seed = default_seed() if args.seed is None else args.seed
    try:
        runner.check_inputs(args.algorithm, args.tol, args.rank)
    except runner.UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    a = files.read_tensor(args.inp)
    try:
        order = _order(args.order, a.ndim)
        dec, report = runner.run(
            args.algorithm, a, tol=args.tol, ranks=args.rank, seed=seed, order=order,
            k=args.k, refinement=not args.no_refinement, threshold=args.threshold,
        )
    except runner.UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    files.write_tucker(args.out, dec)
    res, kind = runner.residual(a, dec, cap=args.residual_cap, seed=seed)
    report.relative_residual = res
    record = runner.report_record(report, a.shape, dec, kind, timings=not args.no_timings)
    line = runner.dumps(record)
    if args.report:
        with open(args.report, "a") as fh:
            fh.write(line + "\n")
    else:
        print(line)
    return 0


def cmd_reconstruct(args) -> int:
    files.write_tensor(args.out, reconstruct(files.read_tucker(args.inp)))
    return 0


def cmd_info(args) -> int:
    info = files.peek(args.inp)
    if info["kind"] == "tucker":
        dec = files.read_tucker(args.inp)
        info["compression_ratio"] = compression_ratio(dec.shape, dec)
    print(json.dumps(info))
    return 0


def cmd_ingest(args) -> int:
    with open(args.raw, "rb") as fh:
        t = files.ingest_raw(fh, args.dims, args.dtype, args.endian, args.layout)
    files.write_tensor(args.out, t)
    return 0


def _suite_tensor(args, n: int, seed: int) -> np.ndarray:
    if args.suite == "hilbert":
        return gallery.hilbert_tensor(4, n)
    if args.suite == "noisy":
        spec = gallery.GallerySpec("noisy_lowrank", (n, n, n), seed, args.noise, args.true_rank)
        return gallery.make(spec)
    return gallery.function_tensor(gallery.FUNCTIONS[args.suite], n, n, n)


def bench_records(args):
    """Yield one record per run, then one aggregate per (algorithm, size, setting)."""
    seed = default_seed() if args.seed is None else args.seed
    if args.repeats < 1:
        raise runner.UsageError("--repeats must be positive")
    if not args.tols and not args.ranks:
        raise runner.UsageError("give --tols and/or --ranks")
    jobs = []
    for name in args.algorithms:
        if name not in runner.ALGORITHMS:
            raise runner.UsageError(f"unknown algorithm {name!r}")
        algo = runner.ALGORITHMS[name]
        settings = []
        if args.tols and algo.takes_tol:
            settings += [("tol", t) for t in args.tols]
        if args.ranks and algo.takes_rank:
            settings += [("rank", r) for r in args.ranks]
        if not settings:
            raise runner.UsageError(f"{name} cannot run with the given --tols/--ranks")
        jobs.append((name, settings))

    groups = defaultdict(list)
    for n in args.sizes:
        a = _suite_tensor(args, n, seed)
        for name, settings in jobs:
            for kind, value in settings:
                for rep in range(args.repeats):
                    kw = {"tol": value} if kind == "tol" else {"ranks": [min(value, m) for m in a.shape]}
                    dec, report = runner.run(name, a, seed=seed + rep, **kw)
                    res, rkind = runner.residual(a, dec, seed=seed + rep)
                    report.relative_residual = res
                    rec = runner.report_record(
                        report, a.shape, dec, rkind, timings=not args.no_timings,
                        suite=args.suite, repeat=rep,
                    )
                    groups[(name, n, kind, value)].append(rec)
                    yield rec
    for (name, n, kind, value), recs in groups.items():
        yield {
            "kind": "aggregate",
            "suite": args.suite,
            "algorithm": name,
            "dims": recs[0]["dims"],
            "tol": value if kind == "tol" else None,
            "ranks": recs[0]["ranks"],
            "repeats": len(recs),
            "mean_seconds": float(np.mean([r["seconds"]["total"] for r in recs])),
            "geomean_residual": runner.geometric_mean([r["relative_residual"] for r in recs]),
            "mean_ranks": runner.rounded_mean_ranks(
                [r["ranks_thresholded"] or r["ranks_raw"] for r in recs]
            ),
        }


def cmd_bench(args) -> int:
    try:
        records = list(bench_records(args))
    except runner.UsageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    text = "".join(runner.dumps(r) + "\n" for r in records)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "gallery": cmd_gallery,
    "compress": cmd_compress,
    "reconstruct": cmd_reconstruct,
    "info": cmd_info,
    "ingest": cmd_ingest,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except files.FormatError as exc:
        return _fail(EXIT_FORMAT, str(exc))
    except FileNotFoundError as exc:
        return _fail(EXIT_USAGE, str(exc))


if __name__ == "__main__":
    sys.exit(main())
