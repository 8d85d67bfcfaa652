from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupforge import (
    Aggregation,
    AggregationKind,
    Partition,
    RatingMatrix,
    Semantics,
    enumerate_partitions,
    exact_optimum,
    export_ip_model,
    fixture,
    grd_form_groups,
    partition_objective,
)
from groupforge.errors import BudgetExceededError, ConfigurationError
from groupforge.exact import partition_count, restricted_growth_strings, stirling2
from groupforge.io import generate_synthetic
from lpparse import parse_lp, solve_lp

LM, AV = Semantics.LM, Semantics.AV
MIN, MAX, SUM = (Aggregation(k) for k in (AggregationKind.MIN, AggregationKind.MAX, AggregationKind.SUM))


def set_partitions(items):
    """All set partitions, by the classic insert-into-each-block recursion."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]
        yield [[first]] + p


def naive_optimum(rows, k, groups, sem, agg_fn):
    m = len(rows[0])
    k = min(k, m)
    best = -math.inf
    for p in set_partitions(list(range(len(rows)))):
        if len(p) > groups:
            continue
        total = 0.0
        for b in p:
            col = [min(rows[u][j] for u in b) if sem is LM else sum(rows[u][j] for u in b) for j in range(m)]
            total += agg_fn(sorted(col, reverse=True)[:k])
        best = max(best, total)
    return best


AGG_FN = {"min": lambda s: s[-1], "max": lambda s: s[0], "sum": sum}


# --- enumeration --------------------------------------------------------------------

def bell_by_triangle(n):
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[-1]


@pytest.mark.parametrize("n,blocks,count", [(3, 3, 5), (4, 2, 8), (5, 1, 1), (1, 4, 1)])
def test_enumeration_counts(n, blocks, count):
    assert len(enumerate_partitions(n, blocks)) == count
    assert sum(1 for _ in enumerate_partitions(n, blocks)) == count


@pytest.mark.parametrize("n", range(1, 9))
def test_enumeration_exhaustive_and_unique(n):
    seen = {p.canonical() for p in enumerate_partitions(n, n)}
    assert len(seen) == bell_by_triangle(n)
    assert partition_count(n, n) == bell_by_triangle(n)


def test_stirling_values():
    # closed form S(n,2) = 2^(n-1) - 1
    assert all(stirling2(n, 2) == 2 ** (n - 1) - 1 for n in range(2, 30))
    assert stirling2(10, 3) == 9330
    assert stirling2(2000, 2) == 2 ** 1999 - 1


def test_rgs_shape():
    strings = list(restricted_growth_strings(4, 2))
    assert strings == sorted(strings)
    assert all(s[0] == 0 and max(s) <= 1 for s in strings)


def test_enumeration_rejects_bad_sizes():
    with pytest.raises(ConfigurationError):
        enumerate_partitions(0, 2)


# --- exact optimum ----------------------------------------------------------------------

def test_exact_ex1():
    out = exact_optimum(fixture("ex1"), 1, 3, LM, MIN)
    assert out.objective == 12
    assert out.partition.same_as(Partition.of([[0, 2, 3], [1, 5], [4]]))


def test_exact_ex5():
    assert exact_optimum(fixture("ex5"), 2, 3, LM, SUM).objective == 21


def test_exact_ex2_true_optimum():
    """The worked example's grouping scores 14, but a better one exists.

    {u1,u2,u3,u5} gets top-2 (i2: 12, i3: 11) and {u4,u6} gets (i2: 7, i1: 5),
    so Min aggregation gives 11 + 5 = 16.
    """
    ex2 = fixture("ex2")
    witness = partition_objective(ex2, [[0, 1, 2, 4], [3, 5]], 2, AV, MIN)
    assert witness.objective == 16
    assert partition_objective(ex2, [[0, 2, 3], [1, 4, 5]], 2, AV, MIN).objective == 14
    out = exact_optimum(ex2, 2, 2, AV, MIN)
    assert out.objective == 16
    rows = [list(map(float, r)) for r in ex2.ratings]
    assert naive_optimum(rows, 2, 2, AV, AGG_FN["min"]) == 16


rows_strategy = st.integers(1, 6).flatmap(
    lambda n: st.integers(1, 4).flatmap(
        lambda m: st.lists(st.lists(st.integers(1, 5), min_size=m, max_size=m), min_size=n, max_size=n)
    )
)


@settings(max_examples=80, deadline=None)
@given(rows_strategy, st.integers(1, 3), st.integers(1, 4), st.sampled_from([LM, AV]),
       st.sampled_from(["min", "max", "sum"]))
def test_exact_matches_naive(rows, k, groups, sem, agg):
    m = RatingMatrix.from_rows(rows)
    aggregation = Aggregation.parse(agg)
    out = exact_optimum(m, k, groups, sem, aggregation)
    assert out.objective == naive_optimum(rows, k, groups, sem, AGG_FN[agg])
    out.partition.validate(m.n, groups)
    assert out.objective >= grd_form_groups(m, k, groups, sem, aggregation).objective
    if sem is LM:
        assert exact_optimum(m, k, groups, sem, aggregation, prune=True).objective == out.objective


def test_first_optimum_in_enumeration_order():
    m = RatingMatrix.from_rows([[5, 5], [5, 5]])
    out = exact_optimum(m, 1, 2, LM, MIN)
    # together scores 5, apart scores 10
    assert out.objective == 10
    tie = RatingMatrix.from_rows([[5, 1], [1, 5], [3, 3]])
    first = exact_optimum(tie, 1, 1, AV, MIN)
    assert first.partition.blocks == ((0, 1, 2),)


def test_memo_path_for_large_n():
    m = generate_synthetic(13, 5, seed=4)  # 2^13 subsets x 5 items: tabulated
    wide = generate_synthetic(11, 9000, seed=4)  # 2^11 x 9000 exceeds the table limit: memoised
    assert exact_optimum(m, 2, 2, LM, MIN).objective >= grd_form_groups(m, 2, 2, LM, MIN).objective
    assert exact_optimum(wide, 1, 2, AV, SUM, prune=False).objective > 0


def test_node_limit_carries_best():
    m = generate_synthetic(7, 3, seed=2)
    with pytest.raises(BudgetExceededError) as err:
        exact_optimum(m, 1, 3, LM, MIN, node_limit=10)
    assert err.value.explored == 10
    assert err.value.best is not None
    full = exact_optimum(m, 1, 3, LM, MIN)
    assert err.value.best.objective <= full.objective


def test_time_limit():
    m = generate_synthetic(12, 3, seed=2)
    with pytest.raises(BudgetExceededError):
        exact_optimum(m, 1, 12, AV, SUM, time_limit=0.0)


# --- IP export -----------------------------------------------------------------------------

def test_ip_counts_small():
    m = RatingMatrix.from_rows([[1, 4], [2, 3], [5, 1]])
    model = export_ip_model(m, 1, 2, LM)
    assert len(model.assignment) == 6 and len(model.kth_item) == 4 and len(model.top_items) == 4
    lp = parse_lp(model.to_lp())
    assert set(lp.binaries) >= set(model.assignment + model.kth_item + model.top_items)
    assert set(lp.variables) <= set(lp.binaries) | set(lp.bounds)


def test_ip_rejects_other_aggregations(ex1):
    with pytest.raises(ConfigurationError):
        export_ip_model(ex1, 2, 2, LM, SUM)


@pytest.mark.parametrize("sem", [LM, AV])
@pytest.mark.parametrize("seed", range(4))
def test_ip_solution_matches_exact(sem, seed):
    """Solve the exported model with an independent MILP solver."""
    m = generate_synthetic(4, 3, seed=seed)
    for k, groups in [(1, 2), (2, 2), (3, 3)]:
        lp = parse_lp(export_ip_model(m, k, groups, sem).to_lp())
        value, _ = solve_lp(lp)
        assert value == pytest.approx(exact_optimum(m, k, groups, sem, MIN).objective, abs=1e-6)


@pytest.mark.parametrize("name,k,groups,sem", [("ex1", 1, 3, LM), ("ex2", 2, 2, AV), ("ex4", 2, 2, AV)])
def test_ip_solution_matches_exact_on_fixtures(name, k, groups, sem):
    m = fixture(name)
    value, _ = solve_lp(parse_lp(export_ip_model(m, k, groups, sem).to_lp()))
    assert value == pytest.approx(exact_optimum(m, k, groups, sem, MIN).objective, abs=1e-6)


def test_ip_header_documents_linearisation(ex1):
    text = export_ip_model(ex1, 2, 3, AV).to_lp()
    assert text.startswith("\\ group formation")
    assert "big-M" in text
    assert text.rstrip().endswith("End")


def test_ip_long_rows_wrap_and_parse():
    m = generate_synthetic(60, 3, seed=0)
    text = export_ip_model(m, 2, 2, AV).to_lp()
    assert max(len(line) for line in text.splitlines()) <= 110
    lp = parse_lp(text)
    av_row = dict((name, coefs) for name, coefs, _, _ in lp.rows)["av_1_1"]
    assert len(av_row) == 61
