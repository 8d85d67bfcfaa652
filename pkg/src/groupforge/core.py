"""Data model and the definitional scoring machinery.

Users and items are addressed by dense integer indices (``0..n-1`` and
``0..m-1``); the human-readable labels live on :class:`RatingMatrix`.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import (
    ConfigurationError,
    InvalidGroupError,
    InvalidMoveError,
    InvalidPartitionError,
    NotFoundError,
)

# Rows per chunk when reducing large member sets, keeps temporaries ~32 MB.
_CHUNK_ELEMENTS = 1 << 22
# Lowest raters remembered per item for the least-misery complement path.
_LOW_RATERS = 32


class Semantics(str, Enum):
    LM = "lm"
    AV = "av"


class AggregationKind(str, Enum):
    MAX = "max"
    MIN = "min"
    SUM = "sum"
    WEIGHTED_SUM = "wsum"


@dataclass(frozen=True)
class RatingScale:
    r_min: float = 1.0
    r_max: float = 5.0

    def __post_init__(self):
        if not (math.isfinite(self.r_min) and math.isfinite(self.r_max)):
            raise ConfigurationError("rating scale bounds must be finite")
        if self.r_min < 0:
            raise ConfigurationError(f"r_min must be >= 0, got {self.r_min}")
        if self.r_min > self.r_max:
            raise ConfigurationError(f"r_min {self.r_min} exceeds r_max {self.r_max}")


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Complete user x item table of preference scores.

    The ratings array is copied to float64 and frozen. Derived indexes
    (personal top-k lists, per-item totals, lowest raters) are built lazily
    and cached; :meth:`prepare` builds them eagerly.
    """

    ratings: np.ndarray
    scale: RatingScale = field(default_factory=RatingScale)
    user_ids: tuple[str, ...] = ()
    item_ids: tuple[str, ...] = ()

    def __post_init__(self):
        r = np.array(self.ratings, dtype=np.float64, copy=True)
        if r.ndim != 2:
            raise ConfigurationError("ratings must be a 2-d table")
        n, m = r.shape
        if n < 1 or m < 1:
            raise ConfigurationError("rating matrix needs at least one user and one item")
        if np.isnan(r).any():
            raise ConfigurationError("rating matrix has missing (NaN) entries")
        lo, hi = float(r.min()), float(r.max())
        if lo < self.scale.r_min or hi > self.scale.r_max:
            raise ConfigurationError(
                f"ratings span [{lo:g}, {hi:g}], outside scale "
                f"[{self.scale.r_min:g}, {self.scale.r_max:g}]"
            )
        r.setflags(write=False)
        object.__setattr__(self, "ratings", r)
        users = tuple(str(u) for u in self.user_ids) or tuple(f"u{i + 1}" for i in range(n))
        items = tuple(str(i) for i in self.item_ids) or tuple(f"i{j + 1}" for j in range(m))
        if len(users) != n or len(set(users)) != n:
            raise ConfigurationError("user_ids must be n distinct labels")
        if len(items) != m or len(set(items)) != m:
            raise ConfigurationError("item_ids must be m distinct labels")
        object.__setattr__(self, "user_ids", users)
        object.__setattr__(self, "item_ids", items)
        object.__setattr__(self, "_topk_cache", {})

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], scale: RatingScale | None = None, **kw):
        return cls(np.asarray(rows, dtype=np.float64), scale or RatingScale(), **kw)

    @property
    def n(self) -> int:
        return self.ratings.shape[0]

    @property
    def m(self) -> int:
        return self.ratings.shape[1]

    def score(self, user: int, item: int) -> float:
        return float(self.ratings[user, item])

    def user_index(self, label: str | int) -> int:
        try:
            return self._user_lookup[str(label)]
        except KeyError:
            raise NotFoundError(f"unknown user {label!r}") from None

    def item_index(self, label: str | int) -> int:
        try:
            return self._item_lookup[str(label)]
        except KeyError:
            raise NotFoundError(f"unknown item {label!r}") from None

    @cached_property
    def _user_lookup(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.user_ids)}

    @cached_property
    def _item_lookup(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.item_ids)}

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(np.asarray(self.ratings.shape, dtype=np.int64).tobytes())
        h.update(np.asarray([self.scale.r_min, self.scale.r_max]).tobytes())
        h.update(np.ascontiguousarray(self.ratings).data)
        return h.hexdigest()

    @cached_property
    def is_integral(self) -> bool:
        step = max(1, _CHUNK_ELEMENTS // self.m)
        return all(
            np.array_equal(block, np.rint(block))
            for block in (self.ratings[s:s + step] for s in range(0, self.n, step))
        )

    @cached_property
    def column_totals(self) -> np.ndarray:
        out = np.zeros(self.m)
        step = max(1, _CHUNK_ELEMENTS // self.m)
        for s in range(0, self.n, step):
            out += self.ratings[s:s + step].sum(axis=0)
        return out

    @cached_property
    def lowest_raters(self) -> tuple[np.ndarray, np.ndarray]:
        """Per item, the ``T`` users with the lowest ratings and those ratings.

        Unordered within the ``T`` but every other user rates the item at
        least as high as all of them. Shapes ``(T, m)``.
        """
        t = min(self.n, _LOW_RATERS)
        users = np.empty((t, self.m), dtype=np.int64)
        step = max(1, _CHUNK_ELEMENTS // self.n)
        for c in range(0, self.m, step):
            block = self.ratings[:, c:c + step]
            if t < self.n:
                idx = np.argpartition(block, t - 1, axis=0)[:t]
            else:
                idx = np.broadcast_to(np.arange(self.n)[:, None], block.shape)
            users[:, c:c + step] = idx
        values = self.ratings[users, np.arange(self.m)[None, :]]
        return users, values

    @cached_property
    def column_minima(self) -> np.ndarray:
        return self.lowest_raters[1].min(axis=0)

    @cached_property
    def column_min_counts(self) -> np.ndarray:
        """How many users give each item its minimum rating."""
        out = np.zeros(self.m, dtype=np.int64)
        lo = self.column_minima
        step = max(1, _CHUNK_ELEMENTS // self.m)
        for s in range(0, self.n, step):
            out += (self.ratings[s:s + step] == lo).sum(axis=0)
        return out

    def personal_top_k(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Every user's top-``k`` items and ratings, shapes ``(n, min(k, m))``.

        Ties are broken by ascending item index. Results are cached per k.
        """
        k = effective_k(k, self.m)
        cache = self._topk_cache
        if k not in cache:
            cache[k] = _rowwise_top_k(self.ratings, k)
        return cache[k]

    def prepare(self, k: int | None = None) -> RatingMatrix:
        """Build the lazy indexes now so later timings exclude them."""
        for name in ("fingerprint", "is_integral", "column_totals", "lowest_raters", "column_minima",
                     "column_min_counts"):
            getattr(self, name)
        if k is not None:
            self.personal_top_k(k)
        return self


def effective_k(k: int, m: int) -> int:
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    return min(int(k), m)


def _rowwise_top_k(ratings: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    n, m = ratings.shape
    items = np.empty((n, k), dtype=np.int64)
    step = max(1, _CHUNK_ELEMENTS // m)
    for s in range(0, n, step):
        block = ratings[s:s + step]
        if k == m:
            sel = np.broadcast_to(np.arange(m), block.shape)
        else:
            kth = -np.partition(-block, k - 1, axis=1)[:, k - 1:k]
            above = block > kth
            tied = block == kth
            need = k - above.sum(axis=1, keepdims=True)
            take = tied & (np.cumsum(tied, axis=1, dtype=np.int32) <= need)
            sel = np.nonzero(above | take)[1].reshape(-1, k)
        vals = np.take_along_axis(block, sel, axis=1)
        # sel is ascending per row, so a stable sort keeps the item-id tie order
        order = np.argsort(-vals, axis=1, kind="stable")
        items[s:s + step] = np.take_along_axis(sel, order, axis=1)
    scores = np.take_along_axis(ratings, items, axis=1) if n * k else np.empty((n, k))
    return items, scores


@dataclass(frozen=True)
class Aggregation:
    """How a group's top-k item scores condense into one satisfaction value.

    For ``WEIGHTED_SUM`` either pass explicit ``weights`` (length must match
    the list) or a ``scheme``: ``"inverse"`` gives 1/j, ``"log"`` gives
    1/log2(j+1) for position j = 1, 2, ...
    """

    kind: AggregationKind = AggregationKind.MIN
    weights: tuple[float, ...] | None = None
    scheme: str = "inverse"

    def __post_init__(self):
        object.__setattr__(self, "kind", AggregationKind(self.kind))
        if self.scheme not in ("inverse", "log"):
            raise ConfigurationError(f"unknown weighting scheme {self.scheme!r}")
        if self.weights is not None:
            if self.kind is not AggregationKind.WEIGHTED_SUM:
                raise ConfigurationError("weights only apply to weighted-sum aggregation")
            w = tuple(float(x) for x in self.weights)
            if not w or any(x <= 0 for x in w):
                raise ConfigurationError("weights must be strictly positive")
            if any(b > a for a, b in zip(w, w[1:])):
                raise ConfigurationError("weights must be non-increasing")
            object.__setattr__(self, "weights", w)

    @classmethod
    def parse(cls, name: str, scheme: str = "inverse") -> Aggregation:
        return cls(AggregationKind(name.lower()), scheme=scheme)

    @property
    def name(self) -> str:
        return self.kind.value

    def weight_vector(self, length: int) -> np.ndarray:
        if self.weights is not None:
            if len(self.weights) != length:
                raise ConfigurationError(
                    f"{len(self.weights)} weights given for a list of {length} items"
                )
            return np.asarray(self.weights)
        pos = np.arange(1, length + 1, dtype=np.float64)
        return 1.0 / pos if self.scheme == "inverse" else 1.0 / np.log2(pos + 1)

    def apply(self, scores: np.ndarray) -> np.ndarray:
        """Aggregate along the last axis of non-increasing ``scores``."""
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape[-1] == 0:
            raise ConfigurationError("cannot aggregate an empty list")
        if self.kind is AggregationKind.MAX:
            return scores[..., 0]
        if self.kind is AggregationKind.MIN:
            return scores[..., -1]
        if self.kind is AggregationKind.SUM:
            return scores.sum(axis=-1)
        return scores @ self.weight_vector(scores.shape[-1])


@dataclass(frozen=True)
class TopKList:
    items: tuple[int, ...]
    scores: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class Partition:
    """Disjoint groups of user indices, kept in emission order."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(tuple(sorted(int(u) for u in b)) for b in self.blocks)
        )

    @classmethod
    def of(cls, blocks: Iterable[Iterable[int]]) -> Partition:
        return cls(tuple(tuple(b) for b in blocks))

    @classmethod
    def singletons(cls, n: int) -> Partition:
        return cls(tuple((u,) for u in range(n)))

    def __len__(self) -> int:
        return len(self.blocks)

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.blocks))

    def same_as(self, other: Partition) -> bool:
        return self.canonical() == other.canonical()

    def block_of(self, user: int) -> int:
        for b, members in enumerate(self.blocks):
            if user in members:
                return b
        raise NotFoundError(f"user {user} is not in the partition")

    def validate(self, n: int, max_blocks: int | None = None) -> None:
        seen: set[int] = set()
        for members in self.blocks:
            if not members:
                raise InvalidPartitionError("partition has an empty block")
            for u in members:
                if u in seen:
                    raise InvalidPartitionError(f"user {u} appears in two blocks")
                if not 0 <= u < n:
                    raise InvalidPartitionError(f"user {u} out of range for n={n}")
                seen.add(u)
        if len(seen) != n:
            missing = sorted(set(range(n)) - seen)[:10]
            raise InvalidPartitionError(f"partition does not cover users {missing}")
        if max_blocks is not None and len(self.blocks) > max_blocks:
            raise InvalidPartitionError(f"{len(self.blocks)} blocks exceed limit {max_blocks}")


@dataclass(frozen=True)
class GroupResult:
    members: tuple[int, ...]
    top_k: TopKList
    satisfaction: float
    priority: float | None = None  # queue priority, set by the greedy algorithms


@dataclass(frozen=True)
class GroupingOutcome:
    partition: Partition
    groups: tuple[GroupResult, ...]
    objective: float
    semantics: Semantics
    aggregation: Aggregation
    k: int
    instance: str  # RatingMatrix.fingerprint
    algorithm: str = "evaluate"

    @property
    def sizes(self) -> list[int]:
        return [len(g.members) for g in self.groups]


def _members(matrix: RatingMatrix, group: Iterable[int]) -> np.ndarray:
    members = np.unique(np.fromiter((int(u) for u in group), dtype=np.int64))
    if members.size == 0:
        raise InvalidGroupError("group is empty")
    if members[0] < 0 or members[-1] >= matrix.n:
        raise NotFoundError(f"group references users outside 0..{matrix.n - 1}")
    return members


def group_item_scores(matrix: RatingMatrix, group: Iterable[int], semantics: Semantics) -> np.ndarray:
    """Group score of every item: min (LM) or sum (AV) over members."""
    semantics = Semantics(semantics)
    members = _members(matrix, group)
    r = matrix.ratings
    if members.size == matrix.n:
        step = _step(matrix)
        chunks = (r[s:s + step] for s in range(0, matrix.n, step))
    else:
        step = _step(matrix)
        chunks = (r[members[s:s + step]] for s in range(0, members.size, step))
    if semantics is Semantics.LM:
        out = np.full(matrix.m, np.inf)
        for c in chunks:
            np.minimum(out, c.min(axis=0), out=out)
    else:
        out = np.zeros(matrix.m)
        for c in chunks:
            out += c.sum(axis=0)
    return out


def _step(matrix: RatingMatrix) -> int:
    return max(1, _CHUNK_ELEMENTS // matrix.m)


def item_group_score(matrix: RatingMatrix, group: Iterable[int], item: int, semantics: Semantics) -> float:
    if not 0 <= int(item) < matrix.m:
        raise NotFoundError(f"unknown item index {item}")
    # Same reduction as group_top_k so stored list scores reproduce bit-for-bit.
    return float(group_item_scores(matrix, group, semantics)[int(item)])


def top_k_of(scores: np.ndarray, k: int) -> TopKList:
    """Top-k entries of a score vector, ties by ascending index."""
    m = scores.shape[0]
    k = effective_k(k, m)
    if k == m:
        order = np.argsort(-scores, kind="stable")
    else:
        kth = np.partition(scores, m - k)[m - k]
        cand = np.flatnonzero(scores >= kth)
        order = cand[np.argsort(-scores[cand], kind="stable")][:k]
    return TopKList(tuple(int(i) for i in order), tuple(float(scores[i]) for i in order))


def group_top_k(matrix: RatingMatrix, group: Iterable[int], k: int, semantics: Semantics) -> TopKList:
    return top_k_of(group_item_scores(matrix, group, semantics), k)


def group_satisfaction(top: TopKList, aggregation: Aggregation) -> float:
    if len(top) == 0:
        raise ConfigurationError("cannot score an empty top-k list")
    return float(aggregation.apply(np.asarray(top.scores)))


def score_group(matrix, members, k, semantics, aggregation, priority=None) -> GroupResult:
    top = group_top_k(matrix, members, k, semantics)
    return GroupResult(tuple(sorted(int(u) for u in members)), top,
                       group_satisfaction(top, aggregation), priority)


def build_outcome(matrix, groups: Sequence[GroupResult], k, semantics, aggregation, algorithm) -> GroupingOutcome:
    partition = Partition(tuple(g.members for g in groups))
    objective = math.fsum(g.satisfaction for g in groups)
    return GroupingOutcome(partition, tuple(groups), objective, Semantics(semantics),
                           aggregation, effective_k(k, matrix.m), matrix.fingerprint, algorithm)


def partition_objective(
    matrix: RatingMatrix,
    partition: Partition,
    k: int,
    semantics: Semantics,
    aggregation: Aggregation,
    algorithm: str = "evaluate",
) -> GroupingOutcome:
    if not isinstance(partition, Partition):
        partition = Partition.of(partition)
    partition.validate(matrix.n)
    effective_k(k, matrix.m)
    groups = [score_group(matrix, b, k, semantics, aggregation) for b in partition.blocks]
    return build_outcome(matrix, groups, k, semantics, aggregation, algorithm)


def apply_move(partition: Partition, user: int, target: int | None) -> Partition:
    """Move ``user`` into the block holding ``target`` (``None`` = a new block).

    An emptied source block is dropped; block order is otherwise preserved.
    """
    try:
        src = partition.block_of(user)
    except NotFoundError:
        raise InvalidMoveError(f"user {user} is not in the partition") from None
    if target is not None:
        dst = partition.block_of(target)  # NotFoundError for an unknown target
        if dst == src:
            return partition
    elif len(partition.blocks[src]) == 1:
        return partition  # already alone
    blocks = [list(b) for b in partition.blocks]
    blocks[src].remove(user)
    if target is None:
        blocks.append([user])
    else:
        blocks[dst].append(user)
    return Partition.of(b for b in blocks if b)
