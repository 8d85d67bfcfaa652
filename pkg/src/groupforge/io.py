"""Rating ingestion, synthetic instances and report serialization."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

import numpy as np

from .analysis import SizeSummary, average_group_satisfaction, group_size_summary
from .core import GroupingOutcome, Partition, RatingMatrix, RatingScale
from .errors import (
    CompletenessError,
    ConfigurationError,
    DuplicateRatingError,
    ParseError,
    RatingRangeError,
)

HEADER = ("user_id", "item_id", "rating")
MISSING_POLICIES = ("error", "fill_min", "fill_item_mean")


@dataclass(frozen=True)
class IngestPolicy:
    """How incomplete rating files are completed.

    ``fill_item_mean`` uses the item's observed mean, rounded half-up to an
    integer and clamped to the scale.
    """

    missing: str = "error"
    scale: RatingScale = field(default_factory=RatingScale)

    def __post_init__(self):
        policy = self.missing.replace("-", "_")
        if policy not in MISSING_POLICIES:
            raise ConfigurationError(f"unknown missing-value policy {self.missing!r}")
        object.__setattr__(self, "missing", policy)


def load_ratings_csv(path: str | Path, policy: IngestPolicy | None = None) -> RatingMatrix:
    """Read ``user_id,item_id,rating`` triples into a dense matrix.

    Ids keep their first-appearance order. Blank lines are skipped.
    """
    policy = policy or IngestPolicy()
    scale = policy.scale
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    entries: dict[tuple[int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            cells = [c.strip() for c in row]
            if lineno == 1 and tuple(c.lower() for c in cells) == HEADER:
                continue
            if len(cells) != 3 or not cells[0] or not cells[1]:
                raise ParseError(f"expected 'user_id,item_id,rating', got {','.join(row)!r}", lineno)
            try:
                value = float(cells[2])
            except ValueError:
                raise ParseError(f"rating {cells[2]!r} is not a number", lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"rating {cells[2]!r} is not finite", lineno)
            if not scale.r_min <= value <= scale.r_max:
                raise RatingRangeError(
                    f"rating {value:g} outside [{scale.r_min:g}, {scale.r_max:g}]", lineno)
            u = users.setdefault(cells[0], len(users))
            i = items.setdefault(cells[1], len(items))
            if (u, i) in entries:
                raise DuplicateRatingError(f"duplicate rating for ({cells[0]}, {cells[1]})", lineno)
            entries[(u, i)] = value
    if not entries:
        raise ParseError(f"{path}: no rating data")

    table = np.full((len(users), len(items)), np.nan)
    rows, cols = zip(*entries)
    table[list(rows), list(cols)] = list(entries.values())
    holes = np.argwhere(np.isnan(table))
    if holes.size:
        if policy.missing == "error":
            user_ids, item_ids = list(users), list(items)
            missing = [(user_ids[u], item_ids[i]) for u, i in holes[:10]]
            listed = ", ".join(f"({u}, {i})" for u, i in missing)
            more = f" and {len(holes) - 10} more" if len(holes) > 10 else ""
            raise CompletenessError(f"{len(holes)} missing ratings: {listed}{more}", missing)
        if policy.missing == "fill_min":
            fill = np.full(table.shape[1], scale.r_min)
        else:
            fill = np.floor(np.nanmean(table, axis=0) + 0.5)
            fill = np.clip(fill, scale.r_min, scale.r_max)
        table[holes[:, 0], holes[:, 1]] = fill[holes[:, 1]]
    return RatingMatrix(table, scale, tuple(users), tuple(items))


def write_ratings_csv(matrix: RatingMatrix, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for u, uid in enumerate(matrix.user_ids):
            for i, iid in enumerate(matrix.item_ids):
                w.writerow((uid, iid, _fmt(matrix.ratings[u, i])))


def generate_synthetic(n: int, m: int, scale: RatingScale | None = None, seed: int = 0,
                       distribution: str = "uniform_integer") -> RatingMatrix:
    """Independent uniform integer ratings on the scale, fixed by ``seed``."""
    scale = scale or RatingScale()
    if n < 1 or m < 1:
        raise ConfigurationError("need n >= 1 and m >= 1")
    if distribution != "uniform_integer":
        raise ConfigurationError(f"unknown distribution {distribution!r}")
    lo, hi = math.ceil(scale.r_min), math.floor(scale.r_max)
    if lo > hi:
        raise ConfigurationError("rating scale contains no integer points")
    rng = np.random.default_rng(seed)
    dtype = np.int8 if hi < 128 else np.int64
    return RatingMatrix(rng.integers(lo, hi, size=(n, m), dtype=dtype, endpoint=True), scale)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ReportMetrics:
    """Everything a report holds besides the outcome itself."""

    avg_group_satisfaction: float
    size_summary: SizeSummary
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    groups_requested: int | None = None
    seed: int | None = None
    runtime_ms: float | None = None
    weighting: str | None = None

    @classmethod
    def compute(cls, matrix: RatingMatrix, outcome: GroupingOutcome, groups: int | None = None,
                seed: int | None = None, runtime_ms: float | None = None) -> ReportMetrics:
        agg = outcome.aggregation
        weighting = agg.scheme if agg.name == "wsum" and agg.weights is None else None
        return cls(average_group_satisfaction(matrix, outcome), group_size_summary(outcome),
                   matrix.user_ids, matrix.item_ids, groups, seed, runtime_ms, weighting)


def report_dict(outcome: GroupingOutcome, metrics: ReportMetrics) -> dict:
    users, items = metrics.user_ids, metrics.item_ids
    config = {
        "algorithm": outcome.algorithm,
        "semantics": outcome.semantics.value,
        "aggregation": outcome.aggregation.name,
        "weighting": metrics.weighting,
        "k": outcome.k,
        "groups": metrics.groups_requested,
        "seed": metrics.seed,
        "instance": outcome.instance,
    }
    groups = [
        {
            "members": [users[u] for u in g.members],
            "top_k": [{"item": items[i], "score": s} for i, s in zip(g.top_k.items, g.top_k.scores)],
            "satisfaction": g.satisfaction,
        }
        for g in outcome.groups
    ]
    return {
        "config": config,
        "groups": groups,
        "objective": outcome.objective,
        "avg_group_satisfaction": metrics.avg_group_satisfaction,
        "size_summary": metrics.size_summary.as_dict(),
        "runtime_ms": metrics.runtime_ms,
        "id_mapping": {"users": list(users), "items": list(items)},
    }


CSV_COLUMNS = ("group", "size", "members", "items", "scores", "satisfaction")


def render_outcome(outcome: GroupingOutcome, metrics: ReportMetrics, format: str = "json") -> str:
    """Report text; field order is fixed so reports diff cleanly."""
    if format == "json":
        return json.dumps(report_dict(outcome, metrics), indent=2) + "\n"
    if format != "csv":
        raise ConfigurationError(f"unknown report format {format!r}")
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for n, g in enumerate(outcome.groups, start=1):
        w.writerow((
            n,
            len(g.members),
            " ".join(metrics.user_ids[u] for u in g.members),
            " ".join(metrics.item_ids[i] for i in g.top_k.items),
            " ".join(_fmt(s) for s in g.top_k.scores),
            _fmt(g.satisfaction),
        ))
    return buf.getvalue()


def write_outcome(outcome: GroupingOutcome, metrics: ReportMetrics, path: str | Path,
                  format: str = "json") -> None:
    text = render_outcome(outcome, metrics, format)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def read_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def report_partition(report: dict) -> Partition:
    """Partition of a JSON report, as indices into its id mapping."""
    index = {u: i for i, u in enumerate(report["id_mapping"]["users"])}
    return Partition.of([index[u] for u in g["members"]] for g in report["groups"])


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)
