"""Command line entry point.

Subcommands: ``gen``, ``solve``, ``exact``, ``bench``, ``compare-ls``.
Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
import warnings
from pathlib import Path

from . import bench
from .exact import DEFAULT_LIMIT_N, HARD_CAP_N, brute_force
from .instance import (
    DiagonalWarning,
    InstanceFormatError,
    generate_random_instance,
    read_instance,
    to_external,
    write_instance,
)
from .local_search import LsMode
from .memetic import EngineParams, run

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _engine_flags(p: argparse.ArgumentParser, runs_default: int) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed; run r uses seed + r")
    p.add_argument("--runs", type=_positive_int, default=runs_default)
    p.add_argument("--pop", type=_positive_int, default=15, help="population size")
    p.add_argument("--k-fraction", type=float, default=0.5, help="share of positions reordered by recombination")
    p.add_argument("--ls-mode", choices=[m.value for m in LsMode], default=LsMode.FORWARD_BACKWARD.value)
    p.add_argument("--alternate-passes", action="store_true", help="repeat forward/backward fixpoints until stable")
    p.add_argument("--parent-rule", choices=["diverse", "similar"], default="diverse")
    p.add_argument("--threads", type=_positive_int, default=None, help=f"worker threads (default ${bench.THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lopcc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a random instance")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--name", default=None)

    s = sub.add_parser("solve", help="solve one instance with repeated runs")
    s.add_argument("instance")
    _engine_flags(s, runs_default=10)
    s.add_argument("--generations", type=int, default=None, help="generation limit (default: 100, or 200 when n >= 150)")
    s.add_argument("--prev", type=float, default=None, help="previous best-known value for g_best")
    s.add_argument("--out", default=None, help="per-run CSV path (default stdout)")
    s.add_argument("--summary-out", default=None, help="summary CSV path (default stdout)")
    s.add_argument("--trace", default=None, help="per-generation trace CSV path")
    s.add_argument("--omit-timing", action="store_true", help="leave time columns empty")

    e = sub.add_parser("exact", help="exhaustive optimum for small instances")
    e.add_argument("instance")
    e.add_argument("--limit-n", type=int, default=DEFAULT_LIMIT_N, help=f"refuse above this n (hard cap {HARD_CAP_N})")

    b = sub.add_parser("bench", help="summary table over a directory of instances")
    b.add_argument("directory")
    _engine_flags(b, runs_default=10)
    b.add_argument("--generations", type=int, default=None, help="override the preset generation limit")
    b.add_argument("--preset", choices=sorted(bench.PRESETS), default="table")
    b.add_argument("--prev", default=None, help="CSV of instance,f_prev; 'builtin' for the bundled table")
    b.add_argument("--out", default=None, help="summary CSV path (default stdout)")
    b.add_argument("--runs-out", default=None, help="per-run CSV path")
    b.add_argument("--omit-timing", action="store_true")

    c = sub.add_parser("compare-ls", help="forward vs forward-backward local search over time")
    c.add_argument("instances", nargs="+")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--runs", type=_positive_int, default=20)
    c.add_argument("--time-budget", type=_positive_float, default=400.0, help="seconds of evolution per run")
    c.add_argument("--sample-interval", type=_positive_float, default=1.0)
    c.add_argument("--pop", type=_positive_int, default=15)
    c.add_argument("--k-fraction", type=float, default=0.5)
    c.add_argument("--out", default=None, help="CSV path (default stdout)")
    return parser


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _load(path):
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DiagonalWarning)
            inst = read_instance(path)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return inst
    except InstanceFormatError as exc:
        raise DataError(str(exc)) from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _params(args, generations: int, **extra) -> EngineParams:
    try:
        return EngineParams(
            pop_size=args.pop,
            k_fraction=args.k_fraction,
            generation_limit=generations,
            seed=args.seed,
            ls_mode=LsMode(args.ls_mode),
            alternate_passes=args.alternate_passes,
            parent_rule=args.parent_rule,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    inst = generate_random_instance(args.n, args.seed, name=args.name)
    with _output(args.out) as fh:
        fh.write(write_instance(inst))
    return 0


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    generations = args.generations if args.generations is not None else bench.PRESETS["table"](inst.n)
    params = _params(args, generations)
    stats = bench.run_many(inst, params, args.runs, bench.thread_count(args.threads))
    meta = bench.metadata_lines(
        instance=inst.name,
        seed=args.seed,
        runs=args.runs,
        generations=generations,
        pop=args.pop,
        k_fraction=args.k_fraction,
        ls_mode=params.ls_mode.value,
    )
    with _output(args.out) as fh:
        bench.write_csv(fh, bench.RUN_HEADER, bench.run_rows(inst.name, inst.n, stats, args.seed, args.omit_timing), meta)
        if args.out is None and args.summary_out is None:
            fh.write("\n")
    row = bench.summarize(inst.name, inst.n, stats, args.prev)
    with _output(args.summary_out) as fh:
        bench.write_csv(fh, bench.SUMMARY_HEADER, [row.cells(args.omit_timing)], meta)
    if args.trace:
        with _output(args.trace) as fh:
            bench.write_csv(fh, bench.TRACE_HEADER, bench.trace_rows(inst.name, stats, args.seed, args.omit_timing), meta)
    return 0


def cmd_exact(args) -> int:
    inst = _load(args.instance)
    cap = min(args.limit_n, HARD_CAP_N)
    if inst.n > cap:
        raise DataError(f"refusing exhaustive search: n={inst.n} exceeds the cap of {cap}")
    res = brute_force(inst, limit_n=cap)
    print(f"instance {inst.name}")
    print(f"n {inst.n}")
    print(f"optimum_f {bench.fmt_float(res.optimum_f)}")
    print("perm " + " ".join(map(str, to_external(res.optimum_perm))))
    print(f"examined {res.permutations_examined}")
    return 0


def _instance_files(directory) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise DataError(f"not a directory: {directory}")
    return sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))


def cmd_bench(args) -> int:
    files = _instance_files(args.directory)
    if args.prev is None:
        prev = {}
    else:
        try:
            prev = bench.load_reference(None if args.prev == "builtin" else args.prev)
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot load reference values from {args.prev}: {exc}") from None
    threads = bench.thread_count(args.threads)
    rows, run_tables = [], []
    for path in files:
        inst = _load(path)
        generations = args.generations if args.generations is not None else bench.PRESETS[args.preset](inst.n)
        stats = bench.run_many(inst, _params(args, generations), args.runs, threads)
        rows.append(bench.summarize(inst.name, inst.n, stats, prev.get(inst.name)))
        run_tables.extend(bench.run_rows(inst.name, inst.n, stats, args.seed, args.omit_timing))
    meta = bench.metadata_lines(
        directory=Path(args.directory).name,
        seed=args.seed,
        runs=args.runs,
        preset=args.preset,
        generations=args.generations if args.generations is not None else "preset",
        pop=args.pop,
        k_fraction=args.k_fraction,
        ls_mode=args.ls_mode,
    )
    body = [r.cells(args.omit_timing) for r in rows]
    if rows:
        body.append(bench.average_row(rows).cells(args.omit_timing))
    with _output(args.out) as fh:
        bench.write_csv(fh, bench.SUMMARY_HEADER, body, meta)
    if args.runs_out:
        with _output(args.runs_out) as fh:
            bench.write_csv(fh, bench.RUN_HEADER, run_tables, meta)
    return 0


def cmd_compare_ls(args) -> int:
    instances = [_load(p) for p in args.instances]
    rows = []
    wins = pairs = 0
    for inst in instances:
        for r in range(args.runs):
            final = {}
            for mode in (LsMode.FORWARD_ONLY, LsMode.FORWARD_BACKWARD):
                try:
                    params = EngineParams(
                        pop_size=args.pop,
                        k_fraction=args.k_fraction,
                        generation_limit=None,
                        seed=args.seed + r,
                        ls_mode=mode,
                        time_budget=args.time_budget,
                        init_ls_mode=LsMode.FORWARD_ONLY,
                    )
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
                stats = run(inst, params, sample_interval=args.sample_interval)
                for t in stats.trace:
                    rows.append([inst.name, mode.value, str(r), bench.fmt_time(t.elapsed_s),
                                 bench.fmt_float(t.pop_mean_f), bench.fmt_float(t.pdi)])
                final[mode] = stats.trace[-1].pop_mean_f
            pairs += 1
            wins += final[LsMode.FORWARD_BACKWARD] <= final[LsMode.FORWARD_ONLY]
    meta = bench.metadata_lines(
        seed=args.seed, runs=args.runs, time_budget=args.time_budget,
        sample_interval=args.sample_interval, pop=args.pop, init_ls_mode="forward_only",
    )
    with _output(args.out) as fh:
        bench.write_csv(fh, bench.COMPARE_HEADER, rows, meta)
    print(f"forward_backward final mean f <= forward_only in {wins}/{pairs} pairs", file=sys.stderr)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "exact": cmd_exact,
    "bench": cmd_bench,
    "compare-ls": cmd_compare_ls,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"lopcc: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
