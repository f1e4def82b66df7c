"""Multi-object tracking by velocity-smoothness maximization.

Detections are linked across frames by maximizing a chain likelihood
that rewards smooth velocities, solved by dynamic programming over
reduced candidate spaces seeded from a min-cost-flow bipartite
baseline. Includes a synthetic-video simulator, evaluation metrics,
and brute-force oracles for testing.
"""

from .assignment import (
    BipartiteConfig,
    count_disappeared,
    fixed_d_matchings,
    gate_cost_from_pair,
    gate_cost_from_sequence,
    resolve_gate_cost,
    solve_bmcf,
    solve_bmcf_fixed_d,
)
from .core import (
    DISAPPEAR,
    CandidateSpace,
    FrameSequence,
    InvalidConfigError,
    InvalidInputError,
    MatchingVector,
    ParseError,
    Position,
    SpaceCapError,
    TrajectorySet,
    Velocity,
    assemble_trajectories,
    matching_to_matrix,
    matchings_from_trajectories,
    matrix_to_matching,
    read_detections,
    read_matchings,
    read_tracks,
    velocity,
    write_detections,
    write_matchings,
    write_tracks,
)
from .metrics import (
    EvalReport,
    coverage,
    cumulative_path_accuracy,
    evaluate,
    f_beta,
    improvement_ratio,
    pair_identity,
    path_accuracy,
    path_identity,
    write_report_csv,
    write_report_json,
)
from .simulator import SimConfig, SimOutput, reflect, simulate
from .tripartite import (
    NoiseModel,
    ReducedSpaceConfig,
    SigmaEstimate,
    TrackDiagnostics,
    TrackResult,
    TrackerConfig,
    auto_lambda,
    build_full_space,
    build_reduced_space,
    estimate_sigma,
    evaluation_count,
    full_space_size,
    incremental_triple_score,
    neighborhood,
    pair_log_likelihood_first,
    solve_dp,
    track,
    triple_log_likelihood,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteConfig",
    "CandidateSpace",
    "DISAPPEAR",
    "EvalReport",
    "FrameSequence",
    "InvalidConfigError",
    "InvalidInputError",
    "MatchingVector",
    "NoiseModel",
    "ParseError",
    "Position",
    "ReducedSpaceConfig",
    "SigmaEstimate",
    "SimConfig",
    "SimOutput",
    "SpaceCapError",
    "TrackDiagnostics",
    "TrackResult",
    "TrackerConfig",
    "TrajectorySet",
    "Velocity",
    "assemble_trajectories",
    "auto_lambda",
    "build_full_space",
    "build_reduced_space",
    "count_disappeared",
    "coverage",
    "cumulative_path_accuracy",
    "estimate_sigma",
    "evaluate",
    "evaluation_count",
    "f_beta",
    "fixed_d_matchings",
    "full_space_size",
    "gate_cost_from_pair",
    "gate_cost_from_sequence",
    "improvement_ratio",
    "incremental_triple_score",
    "matching_to_matrix",
    "matchings_from_trajectories",
    "matrix_to_matching",
    "neighborhood",
    "pair_identity",
    "pair_log_likelihood_first",
    "path_accuracy",
    "path_identity",
    "read_detections",
    "read_matchings",
    "read_tracks",
    "reflect",
    "resolve_gate_cost",
    "simulate",
    "solve_bmcf",
    "solve_bmcf_fixed_d",
    "solve_dp",
    "track",
    "triple_log_likelihood",
    "velocity",
    "write_detections",
    "write_matchings",
    "write_report_csv",
    "write_report_json",
    "write_tracks",
]
