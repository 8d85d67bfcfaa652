"""Command-line front end: ``groupforge <command> [options]``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import bench as benchmod
from .analysis import check_modularity_violation
from .baseline import baseline_form_groups
from .core import Aggregation, Partition, RatingMatrix, RatingScale, Semantics
from .errors import BudgetExceededError, ConfigurationError, GroupForgeError
from .exact import EXACT_BUDGET, exact_optimum, export_ip_model, partition_count
from .fixtures import MODULARITY_CASES, TABLES, fixture
from .greedy import grd_form_groups
from .io import (
    IngestPolicy,
    ReportMetrics,
    generate_synthetic,
    load_ratings_csv,
    render_outcome,
    write_ratings_csv,
)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--ratings", type=Path, help="CSV of user_id,item_id,rating triples")
    src.add_argument("--fixture", choices=sorted(TABLES), help="built-in worked instance")
    p.add_argument("--missing", default="error", choices=["error", "fill-min", "fill-item-mean"])
    p.add_argument("--r-min", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=5.0)
    p.add_argument("--semantics", default="lm", choices=["lm", "av"])
    p.add_argument("--agg", default="min", choices=["max", "min", "sum", "wsum"])
    p.add_argument("--weighting", default="inverse", choices=["inverse", "log"],
                   help="position weights for --agg wsum: 1/j or 1/log2(j+1)")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--groups", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--timing", action="store_true", help="record runtime_ms in the report")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupforge", description="Top-k group formation.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _parent()

    sub.add_parser("form", parents=[common], help="greedy group formation")
    ex = sub.add_parser("exact", parents=[common], help="exhaustive optimum (small instances)")
    ex.add_argument("--force", action="store_true", help="run past the partition budget")
    ex.add_argument("--time-limit", type=float, default=None, help="seconds (required with --force)")
    ex.add_argument("--budget", type=int, default=EXACT_BUDGET, help="max partitions without --force")
    sub.add_parser("baseline", parents=[common], help="Kendall-Tau k-medoids baseline")

    b = sub.add_parser("bench", help="parameter sweep over synthetic instances")
    b.add_argument("--vary", default="users", choices=sorted(benchmod.VARIABLES))
    b.add_argument("--values", type=_int_list, default=(1000, 2000, 4000))
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--algos", default="grd,baseline")
    b.add_argument("--users", type=int, default=200)
    b.add_argument("--items", type=int, default=100)
    b.add_argument("--groups", type=int, default=10)
    b.add_argument("--k", type=int, default=5)
    b.add_argument("--semantics", default="lm", choices=["lm", "av"])
    b.add_argument("--agg", default="min", choices=["max", "min", "sum", "wsum"])
    b.add_argument("--weighting", default="inverse", choices=["inverse", "log"])
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", type=Path, help="CSV of bench rows")

    mod = sub.add_parser("modularity", help="sub/super-modularity violation check")
    msrc = mod.add_mutually_exclusive_group(required=True)
    msrc.add_argument("--fixture", choices=sorted(MODULARITY_CASES))
    msrc.add_argument("--ratings", type=Path)
    mod.add_argument("--p1", help="blocks as 'u1,u3|u2' (default: singletons)")
    mod.add_argument("--p2", help="blocks as 'u1,u3|u2'")
    mod.add_argument("--move", help="'user:target' or 'user:new'")
    mod.add_argument("--k", type=int, default=1)
    mod.add_argument("--semantics", default="av", choices=["lm", "av"])
    mod.add_argument("--agg", default="min", choices=["max", "min", "sum", "wsum"])
    mod.add_argument("--r-min", type=float, default=1.0)
    mod.add_argument("--r-max", type=float, default=5.0)

    ip = sub.add_parser("export-ip", parents=[common], help="write the integer program (LP format)")
    ip.set_defaults(agg="min")

    gen = sub.add_parser("gen", help="write a synthetic rating CSV")
    gen.add_argument("--users", type=int, required=True)
    gen.add_argument("--items", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--r-min", type=float, default=1.0)
    gen.add_argument("--r-max", type=float, default=5.0)
    gen.add_argument("--out", type=Path, required=True)
    return parser


def _load(args, parser) -> RatingMatrix:
    scale = RatingScale(args.r_min, args.r_max)
    if args.fixture:
        matrix = fixture(args.fixture)
        return matrix if scale == matrix.scale else RatingMatrix(matrix.ratings, scale)
    if args.ratings is None:
        parser.error(f"{args.command}: one of --ratings or --fixture is required")
    return load_ratings_csv(args.ratings, IngestPolicy(getattr(args, "missing", "error"), scale))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def _run_grouping(args, parser) -> int:
    matrix = _load(args, parser)
    semantics = Semantics(args.semantics)
    agg = Aggregation.parse(args.agg, args.weighting)
    if args.groups < 1:
        raise ConfigurationError(f"--groups must be >= 1, got {args.groups}")
    t0 = time.perf_counter()
    if args.command == "form":
        matrix.prepare(args.k)
        t0 = time.perf_counter()
        outcome = grd_form_groups(matrix, args.k, args.groups, semantics, agg)
    elif args.command == "baseline":
        outcome = baseline_form_groups(matrix, args.k, args.groups, semantics, agg, seed=args.seed)
    else:
        count = partition_count(matrix.n, args.groups)
        if count > args.budget and not args.force:
            print(f"error: exact refused: {count:.3g} partitions exceed the budget of "
                  f"{args.budget:.3g}; pass --force --time-limit SECONDS to run anyway",
                  file=sys.stderr)
            return 1
        if args.force and count > args.budget and args.time_limit is None:
            parser.error("--force needs --time-limit")
        try:
            outcome = exact_optimum(matrix, args.k, args.groups, semantics, agg,
                                    time_limit=args.time_limit, prune=True)
        except BudgetExceededError as exc:
            print(f"error: {exc}; best objective so far "
                  f"{exc.best.objective if exc.best else 'none'} (not proven optimal)",
                  file=sys.stderr)
            return 3
    runtime = (time.perf_counter() - t0) * 1e3 if args.timing else None
    metrics = ReportMetrics.compute(matrix, outcome, args.groups, args.seed, runtime)
    _emit(render_outcome(outcome, metrics, args.format), args.out)
    return 0


def _run_bench(args) -> int:
    config = benchmod.BenchConfig(
        vary=args.vary, values=args.values, trials=args.trials,
        algos=tuple(a.strip() for a in args.algos.split(",") if a.strip()),
        n=args.users, m=args.items, groups=args.groups, k=args.k,
        semantics=Semantics(args.semantics), aggregation=Aggregation.parse(args.agg, args.weighting),
        seed=args.seed,
    )
    rows = benchmod.bench_sweep(config)
    if args.out:
        benchmod.write_rows(rows, args.out)
    print(benchmod.summary_table(rows))
    return 0


def _parse_blocks(text: str, matrix: RatingMatrix) -> Partition:
    return Partition.of([matrix.user_index(u.strip()) for u in block.split(",") if u.strip()]
                        for block in text.split("|"))


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def _run_modularity(args, parser) -> int:
    matrix = _load(args, parser)
    if args.fixture and not (args.p1 or args.p2 or args.move):
        p1, p2, move = MODULARITY_CASES[args.fixture]
        p1, p2 = Partition.of(p1), Partition.of(p2)
    else:
        if not (args.p2 and args.move):
            parser.error("modularity: --p2 and --move are required without a fixture setup")
        p1 = _parse_blocks(args.p1, matrix) if args.p1 else Partition.singletons(matrix.n)
        p2 = _parse_blocks(args.p2, matrix)
        user, _, target = args.move.partition(":")
        move = (matrix.user_index(user), None if target in ("", "new") else matrix.user_index(target))
    report = check_modularity_violation(matrix, args.k, p1, p2, move, Semantics(args.semantics),
                                        Aggregation.parse(args.agg))
    print("Obj(P1)={} Obj(P2)={} Obj(P1')={} Obj(P2')={}".format(*map(_fmt, report.values)))
    print("(" + ", ".join(_fmt(v) for v in report.values) + ")")
    print("submodularity violated" if report.submodularity_violated else "submodularity holds")
    print("supermodularity violated" if report.supermodularity_violated else "supermodularity holds")
    return 0


def _run_export(args, parser) -> int:
    matrix = _load(args, parser)
    model = export_ip_model(matrix, args.k, args.groups, Semantics(args.semantics),
                            Aggregation.parse(args.agg))
    _emit(model.to_lp(), args.out)
    return 0


def _run_gen(args) -> int:
    matrix = generate_synthetic(args.users, args.items, RatingScale(args.r_min, args.r_max), args.seed)
    write_ratings_csv(matrix, args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("form", "exact", "baseline"):
            return _run_grouping(args, parser)
        if args.command == "bench":
            return _run_bench(args)
        if args.command == "modularity":
            return _run_modularity(args, parser)
        if args.command == "export-ip":
            return _run_export(args, parser)
        return _run_gen(args)
    except (GroupForgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
