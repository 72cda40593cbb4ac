"""Deterministic evaluation engine for text-to-motion generation outputs."""

from .containers import (
    DEFAULT_FPS,
    EmbeddingSet,
    FeatureClip,
    FeatureStats,
    MeshSequence,
    MotionClip,
    NUM_JOINTS,
    PoseDistanceSeries,
    TargetSpec,
)
from .contact import ContactConfig, ContactTrack, detect_contacts, floating_intervals
from .corpus import ClipEntry, Corpus, load_corpus
from .finegrained import (
    AccuracyResult,
    body_part_error,
    eval_window,
    evaluate_targets,
    rotation_error,
    translation_error,
    velocity_error,
)
from .judge import (
    JudgeRequest,
    JudgeResult,
    RetryPolicy,
    build_prompt,
    llm_selection_gap,
    submit,
    verdict_for,
)
from .npyio import load_npy, save_npy
from .physical import (
    PhysicalReport,
    body_penetration,
    dynamic_degree,
    foot_floating,
    foot_sliding,
    ground_penetration,
    jitter_degree,
    pose_quality,
)
from .rootkin import RootTrack, denormalize, recover_root, wrap_angle, yaw_matrix
from .scoring import (
    MetricMatrix,
    integer_bounded_range,
    minmax_norm,
    percentile,
    percentile_clip_norm,
    physical_score,
    select_best,
    semantic_score,
)
from .semantic import (
    RetrievalPool,
    StatSummary,
    asr,
    bootstrap,
    diversity,
    matching_score,
    multimodality,
    r_precision,
)
from .targets import load_targets

__version__ = "0.1.0"
