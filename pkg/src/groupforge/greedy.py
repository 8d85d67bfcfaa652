"""Greedy group formation (GRD-LM-* and GRD-AV-*).

Users are bucketed by a key built from their personal top-k list, the
ell-1 best buckets are popped from a priority queue, and everyone left over
forms the last group, which is scored exactly over all items.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .core import (
    Aggregation,
    AggregationKind,
    GroupingOutcome,
    GroupResult,
    RatingMatrix,
    Semantics,
    TopKList,
    build_outcome,
    effective_k,
    group_item_scores,
    group_satisfaction,
    score_group,
    top_k_of,
)
from .errors import ConfigurationError, NotFoundError


@dataclass(frozen=True, order=True)
class GreedyKey:
    sequence: tuple[int, ...]
    signature: tuple[float, ...] = ()


@dataclass(frozen=True)
class IntermediateGroup:
    key: GreedyKey
    members: tuple[int, ...]
    priority: float


def algorithm_name(semantics: Semantics, aggregation: Aggregation) -> str:
    return f"grd-{Semantics(semantics).value}-{aggregation.name}"


def _signature(scores: np.ndarray, semantics: Semantics, aggregation: Aggregation) -> np.ndarray:
    """Columns of the personal score table that enter the bucketing key."""
    if semantics is Semantics.AV:
        return scores[:, :0]
    if aggregation.kind is AggregationKind.MIN:
        return scores[:, -1:]
    if aggregation.kind is AggregationKind.MAX:
        return scores[:, :1]
    return scores  # sum and weighted sum need every position to agree


def greedy_key(matrix: RatingMatrix, user: int, k: int, semantics: Semantics,
               aggregation: Aggregation) -> GreedyKey:
    if not 0 <= int(user) < matrix.n:
        raise NotFoundError(f"unknown user index {user}")
    top = top_k_of(np.asarray(matrix.ratings[int(user)]), k)
    sig = _signature(np.asarray([top.scores]), Semantics(semantics), aggregation)
    return GreedyKey(top.items, tuple(float(x) for x in sig[0]))


@dataclass
class _Buckets:
    order: np.ndarray       # users sorted by key
    starts: np.ndarray      # first position of each bucket in ``order``
    sizes: np.ndarray
    priority: np.ndarray
    items: np.ndarray       # personal top-k of the bucket's first user
    signature: np.ndarray

    def members(self, b: int) -> np.ndarray:
        return self.order[self.starts[b]:self.starts[b] + self.sizes[b]]

    def key(self, b: int) -> GreedyKey:
        return GreedyKey(tuple(int(i) for i in self.items[b]),
                         tuple(float(x) for x in self.signature[b]))


def _bucket(matrix: RatingMatrix, k: int, semantics: Semantics, aggregation: Aggregation) -> _Buckets:
    items, scores = matrix.personal_top_k(k)
    sig = _signature(scores, semantics, aggregation)
    columns = [items[:, j] for j in range(items.shape[1])] + [sig[:, j] for j in range(sig.shape[1])]
    order = np.lexsort(columns[::-1])
    changed = np.zeros(matrix.n, dtype=bool)
    changed[0] = True
    for col in columns:
        c = col[order]
        changed[1:] |= c[1:] != c[:-1]
    starts = np.flatnonzero(changed)
    sizes = np.diff(np.append(starts, matrix.n))
    personal = aggregation.apply(scores)[order]
    if semantics is Semantics.LM:
        priority = personal[starts]  # identical within a bucket by construction
    else:
        priority = np.add.reduceat(personal, starts)
    first = order[starts]
    return _Buckets(order, starts, sizes, priority, items[first], sig[first])


def build_intermediate_groups(matrix: RatingMatrix, k: int, semantics: Semantics,
                              aggregation: Aggregation):
    """Bucket users by greedy key.

    Returns ``(groups, queue)``: a dict from :class:`GreedyKey` to
    :class:`IntermediateGroup`, and a heap of ``(-priority, -size, key)``
    entries so ``heapq.heappop`` yields the next group to emit.
    """
    semantics = Semantics(semantics)
    effective_k(k, matrix.m)
    b = _bucket(matrix, k, semantics, aggregation)
    groups: dict[GreedyKey, IntermediateGroup] = {}
    queue = []
    for g in range(len(b.starts)):
        key = b.key(g)
        members = tuple(sorted(int(u) for u in b.members(g)))
        groups[key] = IntermediateGroup(key, members, float(b.priority[g]))
        queue.append((-float(b.priority[g]), -len(members), key))
    heapq.heapify(queue)
    return groups, queue


# above this many popped users, one gather beats a loop over rows
_ROW_LOOP = 256


def _remaining_scores(matrix: RatingMatrix, popped: np.ndarray, semantics: Semantics) -> np.ndarray:
    """Exact item scores of everyone not in ``popped``.

    When few users were popped, derive them from whole-population indexes
    instead of rescanning the remaining users' ratings.
    """
    n = matrix.n
    taken = np.zeros(n, dtype=bool)
    taken[popped] = True
    if 2 * popped.size > n or (semantics is Semantics.AV and popped.size and not matrix.is_integral):
        return group_item_scores(matrix, np.flatnonzero(~taken), semantics)
    if semantics is Semantics.AV:
        if popped.size == 0:
            return matrix.column_totals.copy()
        # integer ratings: subtraction is exact
        if popped.size > _ROW_LOOP:
            return matrix.column_totals - matrix.ratings[popped].sum(axis=0)
        out = matrix.column_totals.copy()
        for u in popped:
            out -= matrix.ratings[u]
        return out
    users, values = matrix.lowest_raters
    out = matrix.column_minima.copy()
    if popped.size == 0:
        return out
    # an item's minimum changes only if every user attaining it was popped
    if popped.size > _ROW_LOOP:
        hits = np.count_nonzero(matrix.ratings[popped] == out, axis=0)
    else:
        hits = np.zeros(matrix.m, dtype=np.int32)
        at_min = np.empty(matrix.m, dtype=bool)
        for u in popped:
            np.equal(matrix.ratings[u], out, out=at_min)
            hits += at_min
    cols = np.flatnonzero(hits == matrix.column_min_counts)
    blocked = taken[users[:, cols]]
    out[cols] = np.where(blocked, np.inf, values[:, cols]).min(axis=0)
    lost = cols[blocked.all(axis=0)]
    if lost.size:
        rest = np.flatnonzero(~taken)
        out[lost] = matrix.ratings[np.ix_(rest, lost)].min(axis=0)
    return out


def _score_popped(matrix: RatingMatrix, blocks: list[np.ndarray], k: int, semantics: Semantics,
                  aggregation: Aggregation, priorities: list[float]) -> list[GroupResult]:
    """Score the queue groups from their shared personal top-k items.

    Members of a queue group share their personal top-k sequence. Each member
    rates every item outside it no higher than their own k-th score, and on a
    tie the outside item has the larger index. So under either semantics the
    group's top-k set is that sequence, and only k columns need reading.
    Fractional AV sums are scored in full, since rounding could break a tie
    differently from :func:`group_item_scores`.
    """
    items, _ = matrix.personal_top_k(k)
    results = []
    for b, p in zip(blocks, priorities):
        b = np.sort(b)
        if semantics is Semantics.AV and not matrix.is_integral:
            results.append(score_group(matrix, b, k, semantics, aggregation, priority=p))
            continue
        seq = items[b[0]]
        block = matrix.ratings[np.ix_(b, seq)]
        vals = block.min(axis=0) if semantics is Semantics.LM else block.sum(axis=0)
        order = sorted(range(seq.size), key=lambda j: (-vals[j], seq[j]))
        top = TopKList(tuple(int(seq[j]) for j in order), tuple(float(vals[j]) for j in order))
        results.append(GroupResult(tuple(b.tolist()), top, group_satisfaction(top, aggregation), p))
    return results


def grd_form_groups(matrix: RatingMatrix, k: int, groups: int, semantics: Semantics,
                    aggregation: Aggregation) -> GroupingOutcome:
    """Form at most ``groups`` groups greedily.

    The emitted groups come first in pop order, the leftover group last.
    Popped groups carry their queue priority on ``GroupResult.priority``.
    """
    semantics = Semantics(semantics)
    if groups < 1:
        raise ConfigurationError(f"number of groups must be >= 1, got {groups}")
    k = effective_k(k, matrix.m)
    name = algorithm_name(semantics, aggregation)
    results: list[GroupResult] = []
    popped = np.empty(0, dtype=np.int64)
    if groups > 1:
        b = _bucket(matrix, k, semantics, aggregation)
        queue = list(zip((-b.priority).tolist(), (-b.sizes).tolist(), range(len(b.starts))))
        heapq.heapify(queue)
        chosen, priorities = [], []
        for _ in range(min(groups - 1, len(queue))):
            neg_priority, _, g = heapq.heappop(queue)
            chosen.append(g)
            priorities.append(-neg_priority)
        if chosen:
            results = _score_popped(matrix, [b.members(g) for g in chosen], k, semantics,
                                    aggregation, priorities)
            popped = np.concatenate([b.members(g) for g in chosen])
    if popped.size < matrix.n:
        rest = np.setdiff1d(np.arange(matrix.n), popped)
        top = top_k_of(_remaining_scores(matrix, popped, semantics), k)
        results.append(GroupResult(tuple(rest.tolist()), top, group_satisfaction(top, aggregation)))
    return build_outcome(matrix, results, k, semantics, aggregation, name)
