"""Compactification toolkit for bounded-degree graphings."""

from .completion import (
    LimitTower,
    SupportVerdict,
    TowerFailure,
    approach_sequence,
    build_tower,
    closure_neighbors,
    point_tower,
    support_classify,
    tower_distance,
)
from .errors import DomainError, GraphingError, ResourceError, ValidationError
from .families import (
    GOLDEN,
    add_edge,
    delete_edge,
    golden_rotation,
    golden_rotation_cut,
    graphing_from_spec,
    k3,
    load_spec,
    make_cycle_rotation,
    make_finite_graph,
    make_interval_exchange,
    make_union,
    p1_point,
)
from .graphing import (
    AtomPiece,
    BallExplorer,
    Generator,
    Graphing,
    RootedBall,
    TranslationPiece,
    ValidationReport,
    ball,
    graph_distance,
    max_degree,
    neighbors,
    validate,
)
from .ground import TAU, GroundSpace, IntervalSet, Point, base_distance, measure, sample_point
from .iso import NeighborhoodIso, canonical_key, enumerate_isos, iso_exists, min_displacement_iso
from .metric import (
    BallMeasure,
    C3Report,
    MetricResult,
    c3_check,
    c3_delta,
    compact_distance,
    metric_ball_measure,
    separation_profile,
)
from .stats import (
    BallStats,
    EstimateReport,
    ProbeResult,
    bs_histogram,
    edge_measure,
    exact_ball_distribution,
    greedy_ball_coloring,
    local_equivalence_tv,
    power_ball_identity,
    recurrence_profile,
    self_dense_probe,
    unimodularity_gap,
)

__version__ = "0.1.0"
