"""Exact optimum by exhaustive partition enumeration, plus an LP exporter.

Partitions are enumerated as restricted growth strings: ``a[0] = 0`` and
``a[i] <= max(a[:i]) + 1``, which lists every set partition exactly once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import (
    Aggregation,
    AggregationKind,
    GroupingOutcome,
    Partition,
    RatingMatrix,
    Semantics,
    build_outcome,
    effective_k,
    score_group,
)
from .errors import BudgetExceededError, ConfigurationError

# Build the all-subsets score table only while it stays this small.
_TABLE_LIMIT = 1 << 24
# Partition count above which callers should refuse an exhaustive run.
EXACT_BUDGET = 10**7


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n, k)."""
    if k > n or k < 0:
        return 0
    if n == k:
        return 1
    if k == 0:
        return 0
    row = [1] + [0] * k  # S(0, j)
    for i in range(1, n + 1):
        for j in range(min(i, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def partition_count(n: int, max_blocks: int) -> int:
    return sum(stirling2(n, j) for j in range(1, min(n, max_blocks) + 1))


def restricted_growth_strings(n: int, max_blocks: int):
    """Yield RGS tuples of length ``n`` using at most ``max_blocks`` labels, lexicographically."""
    if n < 1 or max_blocks < 1:
        raise ConfigurationError("need n >= 1 and max_blocks >= 1")
    a = [0] * n
    top = [0] * n  # top[i] = max(a[:i + 1])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and (a[i] > top[i - 1] or a[i] + 1 >= max_blocks):
            i -= 1
        if i == 0:
            return
        a[i] += 1
        top[i] = max(top[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            top[j] = top[i]


def rgs_to_partition(rgs) -> Partition:
    blocks: list[list[int]] = [[] for _ in range(max(rgs) + 1)]
    for user, b in enumerate(rgs):
        blocks[b].append(user)
    return Partition.of(blocks)


class PartitionIterator:
    """All partitions of ``n`` users into at most ``max_blocks`` groups."""

    def __init__(self, n: int, max_blocks: int):
        if n < 1 or max_blocks < 1:
            raise ConfigurationError("need n >= 1 and max_blocks >= 1")
        self.n = n
        self.max_blocks = max_blocks

    def __len__(self) -> int:
        return partition_count(self.n, self.max_blocks)

    def __iter__(self):
        for rgs in restricted_growth_strings(self.n, self.max_blocks):
            yield rgs_to_partition(rgs)


def enumerate_partitions(n: int, max_blocks: int) -> PartitionIterator:
    return PartitionIterator(n, max_blocks)


class _SubsetScores:
    """Satisfaction of any user subset (bitmask), memoised or tabulated."""

    def __init__(self, matrix, k, semantics, aggregation):
        self.matrix, self.k, self.semantics, self.aggregation = matrix, k, semantics, aggregation
        n, m = matrix.ratings.shape
        self.table = None
        self.memo: dict[int, float] = {}
        if (1 << n) * m <= _TABLE_LIMIT:
            self.table = self._tabulate()

    def _tabulate(self) -> np.ndarray:
        r = self.matrix.ratings
        n, m = r.shape
        lm = self.semantics is Semantics.LM
        scores = np.empty((1 << n, m))
        scores[0] = np.inf if lm else 0.0
        for b in range(n):
            lo, hi = 1 << b, 1 << (b + 1)
            if lm:
                np.minimum(scores[:lo], r[b], out=scores[lo:hi])
            else:
                np.add(scores[:lo], r[b], out=scores[lo:hi])
        top = -np.sort(-scores[1:], axis=1)[:, :self.k]
        sat = np.zeros(1 << n)
        sat[1:] = self.aggregation.apply(top)
        return sat

    def __call__(self, mask: int) -> float:
        if self.table is not None:
            return float(self.table[mask])
        if mask not in self.memo:
            members = [u for u in range(self.matrix.n) if mask >> u & 1]
            self.memo[mask] = score_group(self.matrix, members, self.k, self.semantics,
                                          self.aggregation).satisfaction
        return self.memo[mask]


def exact_optimum(
    matrix: RatingMatrix,
    k: int,
    groups: int,
    semantics: Semantics,
    aggregation: Aggregation,
    node_limit: int | None = None,
    time_limit: float | None = None,
    prune: bool = False,
) -> GroupingOutcome:
    """Best partition into at most ``groups`` groups, by depth-first RGS search.

    Among equal optima the first in enumeration order wins. ``node_limit``
    caps the number of complete partitions scored and ``time_limit`` the
    wall-clock seconds; exceeding either raises :class:`BudgetExceededError`
    carrying the best outcome so far. ``prune`` enables a bound that is only
    valid for least misery (a block's satisfaction never rises as members
    join), so it is ignored for aggregate voting.
    """
    semantics = Semantics(semantics)
    if groups < 1:
        raise ConfigurationError(f"number of groups must be >= 1, got {groups}")
    k = effective_k(k, matrix.m)
    n = matrix.n
    sat = _SubsetScores(matrix, k, semantics, aggregation)
    prune = prune and semantics is Semantics.LM
    if prune:
        personal = [sat(1 << u) for u in range(n)]
        # best_rest[i] = max personal satisfaction among users i..n-1
        best_rest = list(np.maximum.accumulate(personal[::-1])[::-1]) + [0.0]
    deadline = None if time_limit is None else time.monotonic() + time_limit
    best_value = -math.inf
    best_masks: list[int] | None = None
    explored = 0
    masks: list[int] = []

    def finish() -> GroupingOutcome | None:
        if best_masks is None:
            return None
        blocks = [[u for u in range(n) if mask >> u & 1] for mask in best_masks]
        results = [score_group(matrix, b, k, semantics, aggregation) for b in blocks]
        return build_outcome(matrix, results, k, semantics, aggregation,
                             f"exact-{semantics.value}-{aggregation.name}")

    def visit(user: int) -> None:
        nonlocal best_value, best_masks, explored
        if user == n:
            explored += 1
            value = math.fsum(sat(mask) for mask in masks)
            if value > best_value:
                best_value, best_masks = value, list(masks)
            if node_limit is not None and explored >= node_limit and explored < total:
                raise BudgetExceededError(f"node limit {node_limit} reached", finish(), explored)
            if deadline is not None and explored % 1024 == 0 and time.monotonic() > deadline:
                raise BudgetExceededError(f"time limit {time_limit}s reached", finish(), explored)
            return
        if prune and best_masks is not None:
            opened = min(groups - len(masks), n - user)
            bound = sum(sat(mask) for mask in masks) + opened * best_rest[user]
            if bound <= best_value:
                return
        bit = 1 << user
        for b in range(len(masks)):
            masks[b] |= bit
            visit(user + 1)
            masks[b] ^= bit
        if len(masks) < groups:
            masks.append(bit)
            visit(user + 1)
            masks.pop()

    total = partition_count(n, groups)
    visit(0)
    return finish()


# ---------------------------------------------------------------------------
# LP export


@dataclass
class IPModel:
    """A mixed-integer linear program in CPLEX LP terms.

    ``objective`` and each constraint are expression strings; variable
    families are ``u_i_g`` (user i in group g), ``y_j_g`` (item j is the
    group's k-th item), ``w_j_g`` (item j is among its top k-1) plus the
    auxiliaries listed in ``continuous`` and ``aux_binaries``.
    """

    objective: str
    constraints: list[tuple[str, str]]
    bounds: list[str]
    assignment: list[str]
    kth_item: list[str]
    top_items: list[str]
    aux_binaries: list[str] = field(default_factory=list)
    continuous: list[str] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    @property
    def binaries(self) -> list[str]:
        return self.assignment + self.kth_item + self.top_items + self.aux_binaries

    def to_lp(self) -> str:
        out = [f"\\ {c}" if c else "\\" for c in self.comments]
        out.append("Maximize")
        out.extend(_wrap(f" obj: {self.objective}"))
        out.append("Subject To")
        for name, expr in self.constraints:
            out.extend(_wrap(f" {name}: {expr}"))
        out.append("Bounds")
        out.extend(f" {b}" for b in self.bounds)
        out.append("Binaries")
        names = self.binaries
        for s in range(0, len(names), 10):
            out.append(" " + " ".join(names[s:s + 10]))
        out.append("End")
        return "\n".join(out) + "\n"


def _wrap(line: str, width: int = 100) -> list[str]:
    if len(line) <= width:
        return [line]
    parts, cur = [], ""
    for tok in line.split(" "):
        if cur and len(cur) + len(tok) + 1 > width and tok in ("+", "-", "<=", ">=", "="):
            parts.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    parts.append(cur)
    return [p if p.startswith(" ") else " " + p for p in parts]


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _terms(pairs) -> str:
    """Render ``[(coef, var), ...]`` as ``a x + b y - c z``."""
    text = ""
    for coef, var in pairs:
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        text += f" {sign} {body}" if text else (f"- {body}" if sign == "-" else body)
    return text or "0"


def export_ip_model(
    matrix: RatingMatrix,
    k: int,
    groups: int,
    semantics: Semantics,
    aggregation: Aggregation | None = None,
) -> IPModel:
    """Integer program for min aggregation under LM or AV.

    ``s_j_g`` is item j's group score and ``z_g`` the group's k-th item
    score. Products of binaries with scores are replaced by big-M rows:
    ``z_g <= s_j_g + M (1 - y_j_g)`` and ``s_j_g >= z_g - M (1 - w_j_g)``.
    Under LM ``s_j_g <= sc(i, j) + M (1 - u_i_g)`` for every user, so the
    maximisation drives ``s_j_g`` to the members' minimum; the binary
    ``e_g`` switches an empty group's score off. Under AV ``s_j_g`` equals
    the member sum outright.
    """
    semantics = Semantics(semantics)
    aggregation = aggregation or Aggregation(AggregationKind.MIN)
    if aggregation.kind is not AggregationKind.MIN:
        raise ConfigurationError("LP export supports min aggregation only")
    if groups < 1:
        raise ConfigurationError(f"number of groups must be >= 1, got {groups}")
    k = effective_k(k, matrix.m)
    n, m = matrix.n, matrix.m
    r = matrix.ratings
    r_max = matrix.scale.r_max
    lm = semantics is Semantics.LM
    big_m = r_max if lm else n * r_max
    G, U, J = range(1, groups + 1), range(1, n + 1), range(1, m + 1)

    u = [f"u_{i}_{g}" for i in U for g in G]
    y = [f"y_{j}_{g}" for j in J for g in G]
    w = [f"w_{j}_{g}" for j in J for g in G]
    s = [f"s_{j}_{g}" for j in J for g in G]
    z = [f"z_{g}" for g in G]
    e = [f"e_{g}" for g in G] if lm else []

    rows: list[tuple[str, str]] = []
    for g in G:
        rows.append((f"kth_{g}", _terms((1, f"y_{j}_{g}") for j in J) + " = 1"))
        rows.append((f"top_{g}", _terms((1, f"w_{j}_{g}") for j in J) + f" = {k - 1}"))
        for j in J:
            rows.append((f"excl_{j}_{g}", f"y_{j}_{g} + w_{j}_{g} <= 1"))
            rows.append((f"cap_{j}_{g}",
                         _terms([(1, f"z_{g}"), (-1, f"s_{j}_{g}"), (big_m, f"y_{j}_{g}")])
                         + f" <= {_num(big_m)}"))
            rows.append((f"above_{j}_{g}",
                         _terms([(1, f"s_{j}_{g}"), (-1, f"z_{g}"), (-big_m, f"w_{j}_{g}")])
                         + f" >= {_num(-big_m)}"))
        if lm:
            for j in J:
                for i in U:
                    sc = float(r[i - 1, j - 1])
                    rows.append((f"lm_{i}_{j}_{g}",
                                 _terms([(1, f"s_{j}_{g}"), (r_max, f"u_{i}_{g}")])
                                 + f" <= {_num(sc + r_max)}"))
            rows.append((f"used_{g}",
                         _terms([(1, f"e_{g}")] + [(-1, f"u_{i}_{g}") for i in U]) + " <= 0"))
            rows.append((f"empty_{g}", _terms([(1, f"z_{g}"), (-r_max, f"e_{g}")]) + " <= 0"))
        else:
            for j in J:
                rows.append((f"av_{j}_{g}",
                             _terms([(1, f"s_{j}_{g}")]
                                    + [(-float(r[i - 1, j - 1]), f"u_{i}_{g}") for i in U])
                             + " = 0"))
    for i in U:
        rows.append((f"assign_{i}", _terms((1, f"u_{i}_{g}") for g in G) + " = 1"))

    bounds = [f"0 <= {v} <= {_num(big_m)}" for v in s + z]
    comments = [
        f"group formation, {semantics.value.upper()} semantics, min aggregation",
        f"users={n} items={m} groups<={groups} k={k} r_max={_num(r_max)}",
        "u_i_g: user i joins group g; y_j_g: item j is group g's k-th item;",
        "w_j_g: item j is among group g's top k-1; s_j_g: group score of item j;",
        "z_g: k-th item score of group g (objective term).",
        f"big-M linearisation with M={_num(big_m)}: z_g <= s_j_g + M(1 - y_j_g),",
        "s_j_g >= z_g - M(1 - w_j_g); maximising z_g then yields the k-th best score.",
    ]
    if lm:
        comments.append("s_j_g <= sc(i,j) + M(1 - u_i_g) for every user i; e_g = 0 forces z_g = 0.")
    else:
        comments.append("s_j_g = sum_i sc(i,j) u_i_g.")
    return IPModel(
        objective=_terms((1, v) for v in z),
        constraints=rows,
        bounds=bounds,
        assignment=u,
        kth_item=y,
        top_items=w,
        aux_binaries=e,
        continuous=s + z,
        comments=comments,
    )
