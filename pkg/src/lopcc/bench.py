"""Multi-run statistics and CSV reporting."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import __version__
from .instance import GENERATOR_NAME, Instance
from .memetic import EngineParams, RunStats, run

RUN_HEADER = ["instance", "n", "run", "seed", "f_best", "generation_best", "time_best_s", "time_total_s"]
SUMMARY_HEADER = ["instance", "n", "runs", "f_prev", "f_best", "g_best", "iter", "time_best_s", "time_total_s"]
COMPARE_HEADER = ["instance", "mode", "run", "elapsed_s", "pop_mean_f", "pdi"]
TRACE_HEADER = ["instance", "run", "seed", "generation", "elapsed_s", "best_f", "pop_mean_f", "pdi"]

THREADS_ENV = "LOPCC_THREADS"
BEST_RTOL = 1e-9

# generation limits per instance size: (table protocol, comparison protocol)
PRESETS = {
    "table": lambda n: 200 if n >= 150 else 100,
    "comparison": lambda n: 110 if n >= 150 else 200,
}


def fmt_float(x: float | None) -> str:
    """Locale-free, round-trippable float text; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def fmt_time(x: float | None, omit: bool = False) -> str:
    if x is None or omit:
        return ""
    return f"{x:.3f}"


@dataclass
class SummaryRow:
    instance: str
    n: float
    f_prev: float | None
    f_best: float
    g_best: float | None
    iter: float
    time_best_s: float
    time_total_s: float
    runs: float

    def cells(self, omit_timing: bool = False) -> list[str]:
        n = str(self.n) if isinstance(self.n, int) else fmt_float(self.n)
        runs = str(self.runs) if isinstance(self.runs, int) else fmt_float(self.runs)
        return [
            self.instance,
            n,
            runs,
            fmt_float(self.f_prev),
            fmt_float(self.f_best),
            fmt_float(self.g_best),
            fmt_float(self.iter),
            fmt_time(self.time_best_s, omit_timing),
            fmt_time(self.time_total_s, omit_timing),
        ]


def summarize(name: str, n: int, stats: list[RunStats], f_prev: float | None = None) -> SummaryRow:
    """Aggregate runs of one instance.

    ``iter`` and ``time_best_s`` average over the runs whose best value ties
    the overall best (relative 1e-9); ``time_total_s`` averages over all runs.
    """
    f_best = min(s.best_f for s in stats)
    tol = BEST_RTOL * max(1.0, abs(f_best))
    hits = [s for s in stats if s.best_f <= f_best + tol]
    return SummaryRow(
        instance=name,
        n=n,
        f_prev=f_prev,
        f_best=f_best,
        g_best=None if f_prev is None else f_best - f_prev,
        iter=float(np.mean([s.generation_of_best for s in hits])),
        time_best_s=float(np.mean([s.time_to_best for s in hits])),
        time_total_s=float(np.mean([s.time_total for s in stats])),
        runs=len(stats),
    )


def average_row(rows: list[SummaryRow]) -> SummaryRow:
    """Column-wise arithmetic mean; optional columns average the rows that have them."""

    def mean(values):
        values = [v for v in values if v is not None]
        return float(np.mean(values)) if values else None

    return SummaryRow(
        instance="Average",
        n=mean([r.n for r in rows]),
        f_prev=mean([r.f_prev for r in rows]),
        f_best=mean([r.f_best for r in rows]),
        g_best=mean([r.g_best for r in rows]),
        iter=mean([r.iter for r in rows]),
        time_best_s=mean([r.time_best_s for r in rows]),
        time_total_s=mean([r.time_total_s for r in rows]),
        runs=mean([r.runs for r in rows]),
    )


def load_reference(path=None) -> dict[str, float]:
    """instance -> f_prev from a CSV with ``instance`` and ``f_prev`` columns.

    ``path=None`` loads the bundled table. Rows with ``usable`` = 0 are skipped.
    """
    if path is None:
        text = resources.files("lopcc").joinpath("data/reference_best.csv").read_text()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out = {}
    for rec in csv.DictReader(lines):
        if rec.get("usable", "1").strip() == "0":
            continue
        value = rec.get("f_prev", "").strip()
        if value:
            out[rec["instance"].strip()] = float(value)
    return out


def thread_count(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def run_many(inst: Instance, params: EngineParams, runs: int, threads: int = 1, **kw) -> list[RunStats]:
    """Independent runs with seeds ``params.seed + r``; results in run order."""
    jobs = [replace(params, seed=params.seed + r) for r in range(runs)]
    if threads <= 1:
        return [run(inst, p, **kw) for p in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: run(inst, p, **kw), jobs))


def metadata_lines(**fields) -> list[str]:
    head = f"# lopcc {__version__} generator={GENERATOR_NAME} seed_policy=seed+run"
    rest = " ".join(f"{k}={v}" for k, v in fields.items())
    return [head, f"# {rest}"] if rest else [head]


def write_csv(fh, header: list[str], rows, meta: list[str] = ()) -> None:
    for line in meta:
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def run_rows(name: str, n: int, stats: list[RunStats], base_seed: int, omit_timing: bool = False):
    for r, s in enumerate(stats):
        yield [
            name,
            str(n),
            str(r),
            str(base_seed + r),
            fmt_float(s.best_f),
            str(s.generation_of_best),
            fmt_time(s.time_to_best, omit_timing),
            fmt_time(s.time_total, omit_timing),
        ]


def trace_rows(name: str, stats: list[RunStats], base_seed: int, omit_timing: bool = False):
    for r, s in enumerate(stats):
        for t in s.trace:
            yield [
                name,
                str(r),
                str(base_seed + r),
                str(t.generation),
                fmt_time(t.elapsed_s, omit_timing),
                fmt_float(t.best_f),
                fmt_float(t.pop_mean_f),
                fmt_float(t.pdi),
            ]


def read_csv_rows(text: str) -> list[dict[str, str]]:
    """Parse CSV output of this module, skipping metadata comments."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))
