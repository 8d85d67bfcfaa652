"""Clustering baseline: Kendall-Tau distance between users' item rankings,
k-medoids on the distance matrix, then ordinary group scoring.

k-medoids stands in for k-means because only pairwise distances exist;
there are no coordinates to average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Aggregation,
    GroupingOutcome,
    Partition,
    RatingMatrix,
    Semantics,
    partition_objective,
)
from .errors import ConfigurationError, DegenerateInputError, NotFoundError


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    entries: np.ndarray

    def __post_init__(self):
        d = np.array(self.entries, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ConfigurationError("distance matrix must be square")
        if not np.array_equal(d, d.T):
            raise ConfigurationError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0) or d.min(initial=0) < 0 or d.max(initial=0) > 1:
            raise ConfigurationError("distances must lie in [0, 1] with a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def kendall_tau_distance(matrix: RatingMatrix, u: int, v: int) -> float:
    """Fraction of item pairs the two users order in opposite directions.

    A pair tied by either user is not discordant.
    """
    if matrix.m < 2:
        raise DegenerateInputError("Kendall-Tau distance needs at least two items")
    for x in (u, v):
        if not 0 <= x < matrix.n:
            raise NotFoundError(f"unknown user index {x}")
    a, b = matrix.ratings[u], matrix.ratings[v]
    iu = np.triu_indices(matrix.m, 1)
    da = np.sign(a[:, None] - a[None, :])[iu]
    db = np.sign(b[:, None] - b[None, :])[iu]
    return float(np.count_nonzero(da * db < 0)) / len(da)


def distance_matrix(matrix: RatingMatrix) -> DistanceMatrix:
    """All pairwise Kendall-Tau distances.

    Discordant counts come from sign vectors over item pairs: for signs in
    {-1, 0, 1}, #(product == -1) = (|s|.|t| - s.t) / 2. Pairs are processed
    one anchor item at a time to bound memory.
    """
    n, m = matrix.n, matrix.m
    if m < 2:
        raise DegenerateInputError("Kendall-Tau distance needs at least two items")
    r = matrix.ratings
    discordant = np.zeros((n, n))
    for i in range(m - 1):
        s = np.sign(r[:, i:i + 1] - r[:, i + 1:])
        a = np.abs(s)
        discordant += (a @ a.T - s @ s.T) / 2
    d = np.rint(discordant) / (m * (m - 1) / 2)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(np.minimum(d, d.T))


def _representatives(d: np.ndarray) -> np.ndarray:
    """Users not at distance 0 from an earlier representative.

    Only these may serve as medoids, so no two medoids coincide.
    """
    reps: list[int] = []
    for u in range(d.shape[0]):
        if all(d[u, r] > 0 for r in reps):
            reps.append(u)
    return np.asarray(reps, dtype=np.int64)


def cluster_users(distances: DistanceMatrix, groups: int, max_iters: int = 100, seed: int = 0) -> Partition:
    """k-medoids (alternating assignment / medoid update) into at most ``groups`` clusters.

    Initial medoids are distinct representatives drawn with ``seed``.
    Users join the nearest medoid, lowest index on ties; each cluster's new
    medoid is the representative member with the smallest distance sum.
    Stops when the medoid set repeats or after ``max_iters`` rounds.
    With ``groups == n`` every user is its own medoid, duplicates included.
    """
    d = distances.entries
    n = d.shape[0]
    if groups < 1 or groups > n:
        raise ConfigurationError(f"number of groups must be in 1..{n}, got {groups}")
    if groups == n:
        return Partition.singletons(n)
    reps = _representatives(d)
    is_rep = np.zeros(n, dtype=bool)
    is_rep[reps] = True
    rng = np.random.default_rng(seed)
    medoids = np.sort(rng.choice(reps, size=min(groups, reps.size), replace=False))
    for _ in range(max_iters):
        labels = np.argmin(d[:, medoids], axis=1)
        updated = []
        for c, old in enumerate(medoids):
            members = np.flatnonzero(labels == c)
            cands = members[is_rep[members]]
            if cands.size == 0:
                updated.append(old)
                continue
            cost = d[np.ix_(cands, members)].sum(axis=1)
            updated.append(cands[np.argmin(cost)])
        updated = np.unique(updated)
        if np.array_equal(updated, medoids):
            break
        medoids = updated
    labels = np.argmin(d[:, medoids], axis=1)
    blocks = [np.flatnonzero(labels == c) for c in range(medoids.size)]
    return Partition.of(b.tolist() for b in blocks if b.size)


def baseline_form_groups(
    matrix: RatingMatrix,
    k: int,
    groups: int,
    semantics: Semantics,
    aggregation: Aggregation,
    seed: int = 0,
    max_iters: int = 100,
) -> GroupingOutcome:
    semantics = Semantics(semantics)
    if groups == 1:
        partition = Partition.of([range(matrix.n)])
    else:
        partition = cluster_users(distance_matrix(matrix), groups, max_iters, seed)
    return partition_objective(matrix, partition, k, semantics, aggregation,
                               algorithm=f"baseline-{semantics.value}-{aggregation.name}")
