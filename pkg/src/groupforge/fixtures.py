"""Small worked instances shipped with the package (users as rows)."""

from __future__ import annotations

from .core import RatingMatrix, RatingScale
from .errors import NotFoundError

TABLES: dict[str, list[list[int]]] = {
    # six users, three items; three groups wanted
    "ex1": [[1, 4, 3], [2, 3, 5], [2, 5, 1], [2, 5, 1], [3, 1, 1], [1, 2, 5]],
    # same users and items, different ratings; two groups wanted
    "ex2": [[3, 1, 4], [1, 4, 3], [2, 5, 1], [2, 5, 1], [1, 2, 3], [3, 2, 1]],
    # the group's bottom item differs from every member's personal bottom item
    "ex3": [[5, 4, 1], [1, 4, 5]],
    # grouping against the shared top-2 order wins under aggregate voting
    "ex4": [[5, 4], [4, 5], [4, 5], [3, 2]],
    # greedy least-misery with sum aggregation is one short of optimal
    "ex5": [[1, 4, 3], [2, 3, 5], [2, 5, 1], [2, 5, 1], [2, 4, 3], [1, 2, 5]],
    # aggregate-voting objective is not submodular
    "proof1": [[4, 2], [2, 3], [1, 5]],
    # ... nor supermodular
    "proof2": [[2, 3], [3, 5], [5, 3]],
}


def fixture(name: str) -> RatingMatrix:
    try:
        rows = TABLES[name]
    except KeyError:
        raise NotFoundError(f"unknown fixture {name!r}; choose from {sorted(TABLES)}") from None
    return RatingMatrix.from_rows(rows, RatingScale(1, 5))


# (P1, P2, move) setups for the non-modularity fixtures, as 0-based indices;
# a move (user, target) puts ``user`` into the block holding ``target``.
MODULARITY_CASES: dict[str, tuple[tuple, tuple, tuple[int, int]]] = {
    "proof1": (((0,), (1,), (2,)), ((0, 2), (1,)), (1, 0)),
    "proof2": (((0,), (1,), (2,)), ((0, 1), (2,)), (2, 0)),
}
