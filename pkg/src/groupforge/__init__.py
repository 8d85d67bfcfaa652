"""Top-k group formation under least-misery and aggregate-voting semantics."""

from .analysis import (
    ModularityReport,
    SizeSummary,
    absolute_error,
    average_group_satisfaction,
    check_modularity_violation,
    group_size_summary,
)
from .baseline import DistanceMatrix, baseline_form_groups, cluster_users, distance_matrix, kendall_tau_distance
from .core import (
    Aggregation,
    AggregationKind,
    GroupingOutcome,
    GroupResult,
    Partition,
    RatingMatrix,
    RatingScale,
    Semantics,
    TopKList,
    apply_move,
    group_satisfaction,
    group_top_k,
    item_group_score,
    partition_objective,
)
from .errors import *  # noqa: F401,F403
from .exact import enumerate_partitions, exact_optimum, export_ip_model
from .fixtures import fixture
from .greedy import build_intermediate_groups, grd_form_groups, greedy_key
from .io import IngestPolicy, ReportMetrics, generate_synthetic, load_ratings_csv, write_outcome

__version__ = "0.1.0"
