"""In-memory containers for clips, features, meshes, embeddings and targets.

Conventions baked into every consumer:
  * joint index 0 is the root (pelvis)
  * up axis is +Y, the ground plane is y = 0
  * the canonical skeleton has 22 joints (enforced by the corpus loader;
    direct construction allows other joint counts for synthetic inputs)
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation

NUM_JOINTS = 22
FEATURE_DIM = 263
DEFAULT_FPS = 20.0

TARGET_KINDS = ("yaw_rotation", "directional_velocity", "root_translation", "body_part_offset")


@dataclass(frozen=True)
class MotionClip:
    """Per-frame 3D joint positions (meters) at a fixed frame rate."""

    joints: np.ndarray  # (T, J, 3)
    fps: float = DEFAULT_FPS
    clip_id: str = ""
    prompt_id: str = ""
    baseline_id: str = ""

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=np.float64)
        if joints.ndim != 3 or joints.shape[2] != 3:
            raise InvariantViolation(self.clip_id or "<clip>", f"joints shape {joints.shape}, need (T, J, 3)")
        if self.fps <= 0:
            raise InvariantViolation(self.clip_id or "<clip>", f"fps {self.fps} must be positive")
        object.__setattr__(self, "joints", joints)

    @property
    def num_frames(self):
        return self.joints.shape[0]

    @property
    def num_joints(self):
        return self.joints.shape[1]


@dataclass(frozen=True)
class FeatureClip:
    """Per-frame 263-dim HumanML/MDM feature rows, possibly normalized."""

    features: np.ndarray  # (T, 263)
    normalized: bool = True
    clip_id: str = ""

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != FEATURE_DIM:
            raise InvariantViolation(
                self.clip_id or "<features>", f"features shape {features.shape}, need (T, {FEATURE_DIM})"
            )
        object.__setattr__(self, "features", features)

    @property
    def num_frames(self):
        return self.features.shape[0]


@dataclass(frozen=True)
class FeatureStats:
    """Per-channel mean/std used to denormalize feature clips."""

    mean: np.ndarray  # (263,)
    std: np.ndarray   # (263,)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != (FEATURE_DIM,) or std.shape != (FEATURE_DIM,):
            raise InvariantViolation("<stats>", f"mean/std shapes {mean.shape}/{std.shape}, need ({FEATURE_DIM},)")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(std)):
            raise InvariantViolation("<stats>", "non-finite entries in mean/std")
        if np.any(std <= 0):
            raise InvariantViolation("<stats>", "std entries must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


@dataclass(frozen=True)
class MeshSequence:
    """Per-frame vertex positions over a fixed triangle topology."""

    vertices: np.ndarray  # (T, V, 3) meters
    faces: np.ndarray     # (F, 3) vertex indices
    clip_id: str = ""

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64)
        faces = np.asarray(self.faces)
        if vertices.ndim != 3 or vertices.shape[2] != 3:
            raise InvariantViolation(self.clip_id or "<mesh>", f"vertices shape {vertices.shape}, need (T, V, 3)")
        if faces.ndim != 2 or faces.shape[1] != 3 or faces.shape[0] == 0:
            raise InvariantViolation(self.clip_id or "<mesh>", f"faces shape {faces.shape}, need (F, 3) with F > 0")
        faces = faces.astype(np.int64)
        if faces.min() < 0 or faces.max() >= vertices.shape[1]:
            raise InvariantViolation(self.clip_id or "<mesh>", "face indices out of vertex range")
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @property
    def num_frames(self):
        return self.vertices.shape[0]

    @property
    def num_faces(self):
        return self.faces.shape[0]


@dataclass(frozen=True)
class PoseDistanceSeries:
    """Per-frame pose-manifold distances (precomputed, nonnegative)."""

    distances: np.ndarray  # (T,)
    clip_id: str = ""

    def __post_init__(self):
        distances = np.asarray(self.distances, dtype=np.float64).reshape(-1)
        if distances.size and (not np.all(np.isfinite(distances)) or distances.min() < 0):
            raise InvariantViolation(self.clip_id or "<pose-distances>", "distances must be finite and >= 0")
        object.__setattr__(self, "distances", distances)


@dataclass
class EmbeddingSet:
    """Text/motion/atomic-action vectors sharing one latent dimension."""

    text_embeddings: dict = field(default_factory=dict)    # prompt_id -> (D,)
    motion_embeddings: dict = field(default_factory=dict)  # clip_id -> (D,)
    atomic_pairs: dict = field(default_factory=dict)       # prompt_id -> [(gt, out), ...]

    def dimension(self):
        for table in (self.text_embeddings, self.motion_embeddings):
            for vec in table.values():
                return int(vec.shape[0])
        for pairs in self.atomic_pairs.values():
            for gt, _out in pairs:
                return int(gt.shape[0])
        return None


@dataclass(frozen=True)
class TargetSpec:
    """One fine-grained control target extracted from an instruction."""

    kind: str
    prompt_id: str = ""
    yaw_target: float | None = None          # radians, yaw_rotation
    speed_target: float | None = None        # m/s, directional_velocity
    direction: np.ndarray | None = None      # unit 3-vector, directional_velocity
    duration: float | None = None            # seconds, directional_velocity
    translation_target: np.ndarray | None = None  # meters, root_translation
    base_joint: int | None = None            # body_part_offset
    target_joint: int | None = None          # body_part_offset
    offset_target: np.ndarray | None = None  # meters, body_part_offset
