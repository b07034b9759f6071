"""Evaluation toolkit for embodied world models.

Scores generated manipulation videos against ground-truth episodes along
three dimensions: scene consistency (patch embedding stability), motion
fidelity (Hausdorff / DTW / dynamics agreement of end-effector
trajectories), and semantics (captions, step alignment, logical
consistency, diversity).  Per-episode evidence is pre-extracted by
companion adapter tools; this package consumes the interchange files and
produces ranked reports.
"""

from .aggregation import (
    EpisodeScores,
    HumanRanking,
    METRIC_COLUMNS,
    MOTION_COLUMNS,
    MetricReport,
    ModelRow,
    SEMANTIC_COLUMNS,
    PerturbationRow,
    PerturbationTable,
    RankCorrelation,
    aggregate,
    build_report,
    normalize_scores,
    perturb,
    perturbation_study,
    rank_correlation,
    REPORT_HEADER,
    perturbation_table_to_csv,
    perturbation_table_to_svg,
    report_from_dict,
    report_to_csv,
    report_to_dict,
    report_to_markdown,
)
from .datamodel import (
    CandidateRecord,
    EmbeddingKind,
    EmbeddingTensor,
    EpisodeRecord,
    Hand,
    LogicVerdict,
    Manifest,
    Point2,
    Point3,
    TaskRecord,
    Trajectory,
    load_embedding,
    load_manifest,
    load_trajectory,
    write_embedding,
    write_trajectory,
)
from .diversity import (
    SimilarityMatrix,
    VoxelGrid,
    compute_bounds,
    greedy_diverse_select,
    pair_iou,
    select_diverse_trajectories,
    similarity_matrix,
    voxelize,
)
from .errors import EvalError
from .pipeline import (
    CACHE_ENV_VAR,
    RunConfig,
    evaluate,
    score_episode_model,
    write_report_files,
)
from .scene import SceneScore, patch_cosine, scene_score
from .semantics import (
    SemanticScores,
    bleu,
    logic_score,
    semantic_diversity,
    step_alignment,
    tokenize,
)
from .trajectory import (
    DynamicsProfile,
    DynConfig,
    MotionScores,
    amplitude_ratio,
    best_of_n,
    dtw_cost,
    dyn_score,
    dyn_score_trajectories,
    dynamics_profile,
    hsd_score,
    hull_diameter,
    motion_scores,
    ndtw_score,
    primary_hand,
    symmetric_hausdorff,
    wasserstein_1d,
)

__version__ = "0.1.0"

__all__ = [
    "EvalError",
    "Hand",
    "Point2",
    "Point3",
    "Trajectory",
    "EmbeddingKind",
    "EmbeddingTensor",
    "LogicVerdict",
    "CandidateRecord",
    "EpisodeRecord",
    "TaskRecord",
    "Manifest",
    "load_manifest",
    "load_trajectory",
    "write_trajectory",
    "load_embedding",
    "write_embedding",
    "symmetric_hausdorff",
    "hsd_score",
    "dtw_cost",
    "ndtw_score",
    "dynamics_profile",
    "wasserstein_1d",
    "amplitude_ratio",
    "DynConfig",
    "DynamicsProfile",
    "MotionScores",
    "dyn_score",
    "dyn_score_trajectories",
    "motion_scores",
    "best_of_n",
    "hull_diameter",
    "primary_hand",
    "VoxelGrid",
    "SimilarityMatrix",
    "compute_bounds",
    "voxelize",
    "pair_iou",
    "similarity_matrix",
    "greedy_diverse_select",
    "select_diverse_trajectories",
    "SceneScore",
    "patch_cosine",
    "scene_score",
    "tokenize",
    "bleu",
    "SemanticScores",
    "step_alignment",
    "logic_score",
    "semantic_diversity",
    "EpisodeScores",
    "ModelRow",
    "MetricReport",
    "aggregate",
    "build_report",
    "normalize_scores",
    "perturb",
    "PerturbationRow",
    "PerturbationTable",
    "perturbation_study",
    "HumanRanking",
    "RankCorrelation",
    "rank_correlation",
    "METRIC_COLUMNS",
    "MOTION_COLUMNS",
    "SEMANTIC_COLUMNS",
    "REPORT_HEADER",
    "report_to_dict",
    "report_from_dict",
    "report_to_csv",
    "report_to_markdown",
    "perturbation_table_to_csv",
    "perturbation_table_to_svg",
    "CACHE_ENV_VAR",
    "RunConfig",
    "evaluate",
    "score_episode_model",
    "write_report_files",
    "__version__",
]
