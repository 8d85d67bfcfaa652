"""Evaluation metrics and the sub/super-modularity violation checker."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Aggregation,
    GroupingOutcome,
    Partition,
    RatingMatrix,
    Semantics,
    apply_move,
    partition_objective,
)
from .errors import ConfigurationError, InvalidMoveError, NotFoundError


@dataclass(frozen=True)
class SizeSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def as_dict(self) -> dict[str, float]:
        return {"min": self.min, "q1": self.q1, "median": self.median, "q3": self.q3, "max": self.max}


@dataclass(frozen=True)
class ModularityReport:
    obj_p1: float
    obj_p2: float
    obj_p1_moved: float
    obj_p2_moved: float
    submodularity_violated: bool
    supermodularity_violated: bool

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.obj_p1, self.obj_p2, self.obj_p1_moved, self.obj_p2_moved)


def average_group_satisfaction(matrix: RatingMatrix, outcome: GroupingOutcome) -> float:
    """Mean member rating of each recommended item, summed over positions and groups,
    divided by the number of groups."""
    if outcome.instance != matrix.fingerprint:
        raise ConfigurationError("outcome was computed on a different rating matrix")
    total = []
    for g in outcome.groups:
        block = matrix.ratings[np.ix_(np.asarray(g.members), np.asarray(g.top_k.items))]
        total.append(float(block.mean(axis=0).sum()))
    return math.fsum(total) / len(outcome.groups)


def group_size_summary(outcome: GroupingOutcome) -> SizeSummary:
    sizes = np.asarray(outcome.sizes, dtype=np.float64)
    if sizes.size == 0:
        raise ConfigurationError("outcome has no groups")
    q = np.quantile(sizes, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return SizeSummary(*(float(x) for x in q))


def absolute_error(approx: GroupingOutcome, optimal: GroupingOutcome) -> float:
    """``optimal.objective - approx.objective`` for outcomes of the same configuration."""
    if approx.instance != optimal.instance:
        raise ConfigurationError("outcomes come from different instances")
    if (approx.semantics, approx.aggregation, approx.k) != (optimal.semantics, optimal.aggregation, optimal.k):
        raise ConfigurationError("outcomes use different semantics, aggregation or k")
    return optimal.objective - approx.objective


def check_modularity_violation(
    matrix: RatingMatrix,
    k: int,
    p1: Partition,
    p2: Partition,
    move: tuple[int, int | None],
    semantics: Semantics = Semantics.AV,
    aggregation: Aggregation | None = None,
) -> ModularityReport:
    """Apply one move to both partitions and compare objective changes.

    ``move = (user, target)`` relocates ``user`` into the block currently
    holding ``target`` (``None`` opens a new block). The inequalities are
    the ones instantiated in the non-modularity arguments for aggregate
    voting; other semantics are accepted but carry no such claim.
    """
    aggregation = aggregation or Aggregation()
    user, target = move
    moved = []
    for p in (p1, p2):
        p.validate(matrix.n)
        try:
            moved.append(apply_move(p, user, target))
        except NotFoundError as exc:
            raise InvalidMoveError(f"move {move} not applicable: {exc}") from None

    def obj(p: Partition) -> float:
        return partition_objective(matrix, p, k, semantics, aggregation).objective

    a, b, a2, b2 = obj(p1), obj(p2), obj(moved[0]), obj(moved[1])
    return ModularityReport(
        a, b, a2, b2,
        submodularity_violated=(a - a2) > (b - b2),
        supermodularity_violated=(a2 - a) > (b2 - b),
    )


def modularity_sweep(
    matrix: RatingMatrix,
    k: int,
    semantics: Semantics = Semantics.AV,
    aggregation: Aggregation | None = None,
    max_users: int = 5,
):
    """Yield ``(p1, p2, move, report)`` for every pair of partitions and every
    single-user move on a small instance (``n <= max_users``)."""
    from .exact import enumerate_partitions

    if matrix.n > max_users:
        raise ConfigurationError(f"sweep limited to n <= {max_users}, got {matrix.n}")
    parts = list(enumerate_partitions(matrix.n, matrix.n))
    for p1 in parts:
        for p2 in parts:
            for user in range(matrix.n):
                for target in [None, *range(matrix.n)]:
                    if target == user:
                        continue
                    mv = (user, target)
                    yield p1, p2, mv, check_modularity_violation(matrix, k, p1, p2, mv, semantics, aggregation)
