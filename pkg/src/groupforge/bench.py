"""Parameter-sweep benchmark: objective, average satisfaction and runtime
for each algorithm over synthetic instances."""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .analysis import average_group_satisfaction
from .baseline import baseline_form_groups
from .core import Aggregation, RatingScale, Semantics
from .errors import ConfigurationError
from .exact import EXACT_BUDGET, exact_optimum, partition_count
from .greedy import grd_form_groups
from .io import generate_synthetic

ALGORITHMS = ("grd", "baseline", "exact")
VARIABLES = {"users": "n", "items": "m", "groups": "groups", "k": "k"}


@dataclass(frozen=True)
class BenchConfig:
    vary: str = "users"
    values: tuple[int, ...] = (1000, 2000, 4000)
    trials: int = 1
    algos: tuple[str, ...] = ("grd", "baseline")
    n: int = 200
    m: int = 100
    groups: int = 10
    k: int = 5
    semantics: Semantics = Semantics.LM
    aggregation: Aggregation = Aggregation()
    seed: int = 0
    scale: RatingScale = RatingScale()
    exact_budget: int = EXACT_BUDGET

    def __post_init__(self):
        if self.vary not in VARIABLES:
            raise ConfigurationError(f"--vary must be one of {sorted(VARIABLES)}, got {self.vary!r}")
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown:
            raise ConfigurationError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if not self.values:
            raise ConfigurationError("--values must list at least one value")
        if self.trials < 1:
            raise ConfigurationError("--trials must be >= 1")
        object.__setattr__(self, "semantics", Semantics(self.semantics))

    def at(self, value: int) -> dict[str, int]:
        params = {"n": self.n, "m": self.m, "groups": self.groups, "k": self.k}
        params[VARIABLES[self.vary]] = value
        return params


@dataclass(frozen=True)
class BenchRow:
    varied_parameter: str
    value: int
    algorithm: str
    trial: int
    seed: int
    objective: float
    avg_satisfaction: float
    runtime_ms: float
    prep_ms: float


def check_budget(config: BenchConfig) -> None:
    """Refuse exact runs whose partition count exceeds the oracle budget."""
    if "exact" not in config.algos:
        return
    for v in config.values:
        p = config.at(v)
        count = partition_count(p["n"], p["groups"])
        if count > config.exact_budget:
            raise ConfigurationError(
                f"exact refused for {config.vary}={v}: {count:.3g} partitions of n={p['n']} "
                f"into <= {p['groups']} groups exceed the budget of {config.exact_budget:.0e}"
            )


def _run_cell(config: BenchConfig, vi: int, trial: int) -> list[BenchRow]:
    value = config.values[vi]
    p = config.at(value)
    seed = config.seed + trial
    matrix = generate_synthetic(p["n"], p["m"], config.scale, seed)
    rows = []
    for algo in config.algos:
        t0 = time.perf_counter()
        if algo == "grd":
            matrix.prepare(p["k"])
        prep = (time.perf_counter() - t0) * 1e3
        t0 = time.perf_counter()
        if algo == "grd":
            out = grd_form_groups(matrix, p["k"], p["groups"], config.semantics, config.aggregation)
        elif algo == "baseline":
            out = baseline_form_groups(matrix, p["k"], min(p["groups"], matrix.n),
                                       config.semantics, config.aggregation, seed=seed)
        else:
            out = exact_optimum(matrix, p["k"], p["groups"], config.semantics, config.aggregation,
                                prune=True)
        runtime = (time.perf_counter() - t0) * 1e3
        rows.append(BenchRow(config.vary, value, algo, trial, seed, out.objective,
                             average_group_satisfaction(matrix, out), runtime, prep))
    return rows


def thread_count() -> int:
    raw = os.environ.get("GROUPFORGE_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigurationError(f"GROUPFORGE_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ConfigurationError("GROUPFORGE_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def bench_sweep(config: BenchConfig, threads: int | None = None) -> list[BenchRow]:
    """Run every (value, trial) cell; rows come back ordered by
    (value, algorithm, trial) regardless of completion order."""
    check_budget(config)
    cells = [(vi, t) for vi in range(len(config.values)) for t in range(config.trials)]
    threads = threads or thread_count()
    if threads == 1:
        results = [_run_cell(config, vi, t) for vi, t in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _run_cell(config, *c), cells))
    rows = [r for cell in results for r in cell]
    algo_rank = {a: i for i, a in enumerate(config.algos)}
    value_rank = {v: i for i, v in enumerate(config.values)}
    rows.sort(key=lambda r: (value_rank[r.value], algo_rank[r.algorithm], r.trial))
    return rows


BENCH_COLUMNS = tuple(f.name for f in fields(BenchRow))


def write_rows(rows: list[BenchRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            d = asdict(r)
            d["runtime_ms"] = f"{r.runtime_ms:.3f}"
            d["prep_ms"] = f"{r.prep_ms:.3f}"
            w.writerow(d)


def summary_table(rows: list[BenchRow]) -> str:
    """Mean objective / satisfaction / runtime per (value, algorithm)."""
    cells: dict[tuple, list[BenchRow]] = {}
    for r in rows:
        cells.setdefault((r.varied_parameter, r.value, r.algorithm), []).append(r)
    lines = [f"{'parameter':>10} {'value':>8} {'algorithm':>9} {'objective':>12} "
             f"{'avg_sat':>10} {'runtime_ms':>11}"]
    for (param, value, algo), rs in cells.items():
        k = len(rs)
        lines.append(
            f"{param:>10} {value:>8} {algo:>9} {sum(r.objective for r in rs) / k:>12.3f} "
            f"{sum(r.avg_satisfaction for r in rs) / k:>10.3f} {sum(r.runtime_ms for r in rs) / k:>11.2f}"
        )
    return "\n".join(lines)


