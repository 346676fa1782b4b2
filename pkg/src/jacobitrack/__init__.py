"""Simplified feature-tracking graphs for 2D time-varying scalar fields."""

from .errors import ConfigError, DataError, InternalInvariantError, JacobitrackError
from .fields import GridSpec, ScalarGrid, TimeVaryingField
from .criticals import (
    CriticalPoint,
    TotalOrder,
    annotate_persistence,
    classify_vertex,
    critical_points,
    persistence_pairs,
    simplify_field,
)
from .gradient import MagnitudeGrid, VectorGrid, gradient_field, magnitude_field
from .sublevel import (
    ComponentSet,
    SublevelComponent,
    components,
    components_at,
    drop_degree_zero,
    sublevel_cells,
)
from .mergetree import MergeTree, RobustnessReport, merge_tree, static_robustness, suggest_delta
from .jacobi import (
    JacobiEdge,
    JacobiEdgeSet,
    SpaceTimeMesh,
    VERTICAL,
    classify_edge,
    jacobi_set,
    lambda_e,
)
from .tracking import Track, TrackGraph, extract_tracks, overlap, track_graph
from .postprocess import (
    PostprocessParams,
    filter_short,
    merge_end_to_start,
    merge_overlapping,
    postprocess,
)
from .synth import GaussianSpec, ground_truth_tracks, make_preset, rotating_gaussians, rotating_preset
from .fileio import load_field, save_field, write_stats, write_tracks
from .pipeline import PipelineConfig, PipelineResult, run_pipeline, scaling_probe

__version__ = "0.1.0"
