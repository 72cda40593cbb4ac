"""Corpus loading: JSON manifest + NPY arrays -> validated containers.

The manifest is a JSON object mapping clip_id to a record:

    {
      "walk_0001": {
        "prompt_id": "p012",
        "baseline_id": "modelA",
        "fps": 20,
        "joints": "walk_0001_joints.npy",          # (T, 22, 3), optional
        "features": "walk_0001_feats.npy",          # (T, 263), optional
        "features_normalized": true,                # default true
        "vertices": "walk_0001_verts.npy",          # (T, V, 3), with "faces"
        "faces": "faces.npy",                       # (F, 3)
        "pose_distances": "walk_0001_nrdf.npy",     # (T,), optional
        "motion_embedding": "walk_0001_emb.npy",    # (D,), optional
        "text_embedding": "p012_text.npy",          # (D,), optional
        "atomic_pairs": [["a0_gt.npy", "a0_out.npy"]],
        "prompt_type": "Dynamics",                  # optional grouping tag
        "prompt_text": "a person walks forward",    # optional, judge input
        "strip": "walk_0001_strip.png"              # optional, judge input
      }, ...
    }

Relative paths resolve against the manifest's directory. Iteration order is
always lexicographic by clip_id, independent of manifest entry order.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .containers import (
    DEFAULT_FPS,
    EmbeddingSet,
    FeatureClip,
    MeshSequence,
    MotionClip,
    NUM_JOINTS,
    PoseDistanceSeries,
)
from .errors import InvariantViolation, ManifestError, MissingFile
from .npyio import load_npy


@dataclass(frozen=True)
class ClipEntry:
    """Everything the manifest supplied for one clip, validated."""

    clip_id: str
    prompt_id: str
    baseline_id: str
    fps: float = DEFAULT_FPS
    prompt_type: str = "default"
    prompt_text: str | None = None
    motion: MotionClip | None = None
    features: FeatureClip | None = None
    mesh: MeshSequence | None = None
    pose_distances: PoseDistanceSeries | None = None
    strip_path: Path | None = None
    atomic_pairs: tuple = ()  # ((gt_vec, out_vec), ...) for this clip's output

    @property
    def num_frames(self):
        if self.motion is not None:
            return self.motion.num_frames
        if self.features is not None:
            return self.features.num_frames
        return None


@dataclass
class Corpus:
    """Validated clip entries plus the embedding tables they referenced."""

    entries: dict = field(default_factory=dict)  # clip_id -> ClipEntry, insertion = sorted
    embeddings: EmbeddingSet = field(default_factory=EmbeddingSet)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())

    def clip_ids(self):
        return list(self.entries.keys())

    def by_prompt(self):
        groups = {}
        for entry in self:
            groups.setdefault(entry.prompt_id, []).append(entry)
        return groups

    def by_baseline(self):
        groups = {}
        for entry in self:
            groups.setdefault(entry.baseline_id, []).append(entry)
        return groups

    def baseline_ids(self):
        return sorted({entry.baseline_id for entry in self})


def _resolve(base_dir, rel):
    path = Path(rel)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise MissingFile(str(path))
    return path


def _load_array(base_dir, rel, clip_id, name, shape_check):
    arr = load_npy(_resolve(base_dir, rel))
    arr = np.asarray(arr, dtype=np.float64)
    shape_check(arr)
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation(clip_id, f"{name} contains non-finite values")
    return arr


def _load_entry(clip_id, record, base_dir, embeddings):
    if not isinstance(record, dict):
        raise InvariantViolation(clip_id, "manifest record must be an object")
    if "prompt_id" not in record:
        raise InvariantViolation(clip_id, "missing prompt_id")
    prompt_id = str(record["prompt_id"])
    baseline_id = str(record.get("baseline_id", ""))
    fps = float(record.get("fps", DEFAULT_FPS))
    if fps <= 0:
        raise InvariantViolation(clip_id, f"fps {fps} must be positive")

    frame_counts = {}

    motion = None
    if "joints" in record:
        def check_joints(arr):
            if arr.ndim != 3 or arr.shape[1] != NUM_JOINTS or arr.shape[2] != 3:
                raise InvariantViolation(clip_id, f"joints shape {arr.shape}, need (T, {NUM_JOINTS}, 3)")

        joints = _load_array(base_dir, record["joints"], clip_id, "joints", check_joints)
        motion = MotionClip(joints, fps=fps, clip_id=clip_id, prompt_id=prompt_id, baseline_id=baseline_id)
        frame_counts["joints"] = motion.num_frames

    features = None
    if "features" in record:
        def check_features(arr):
            if arr.ndim != 2 or arr.shape[1] != 263:
                raise InvariantViolation(clip_id, f"features shape {arr.shape}, need (T, 263)")

        feats = _load_array(base_dir, record["features"], clip_id, "features", check_features)
        features = FeatureClip(feats, normalized=bool(record.get("features_normalized", True)), clip_id=clip_id)
        frame_counts["features"] = features.num_frames

    mesh = None
    if ("vertices" in record) != ("faces" in record):
        raise InvariantViolation(clip_id, "vertices and faces must be given together")
    if "vertices" in record:
        def check_vertices(arr):
            if arr.ndim != 3 or arr.shape[2] != 3:
                raise InvariantViolation(clip_id, f"vertices shape {arr.shape}, need (T, V, 3)")

        vertices = _load_array(base_dir, record["vertices"], clip_id, "vertices", check_vertices)
        faces_f = load_npy(_resolve(base_dir, record["faces"]))
        faces = np.asarray(faces_f)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise InvariantViolation(clip_id, f"faces shape {faces.shape}, need (F, 3)")
        if not np.all(faces == np.round(faces)):
            raise InvariantViolation(clip_id, "faces must hold integer indices")
        # mesh frames may be sampled coarser than the joint timeline; body
        # penetration averages over the mesh's own frames
        mesh = MeshSequence(vertices, faces.astype(np.int64), clip_id=clip_id)

    pose_distances = None
    if "pose_distances" in record:
        def check_dist(arr):
            if arr.ndim != 1:
                raise InvariantViolation(clip_id, f"pose_distances shape {arr.shape}, need (T,)")

        dist = _load_array(base_dir, record["pose_distances"], clip_id, "pose_distances", check_dist)
        if dist.size and dist.min() < 0:
            raise InvariantViolation(clip_id, "pose_distances must be >= 0")
        pose_distances = PoseDistanceSeries(dist, clip_id=clip_id)
        frame_counts["pose_distances"] = dist.shape[0]

    if len(set(frame_counts.values())) > 1:
        raise InvariantViolation(clip_id, f"frame counts disagree: {frame_counts}")

    if "motion_embedding" in record:
        vec = _load_array(base_dir, record["motion_embedding"], clip_id, "motion_embedding",
                          lambda a: None).reshape(-1)
        embeddings.motion_embeddings[clip_id] = vec
    if "text_embedding" in record:
        vec = _load_array(base_dir, record["text_embedding"], clip_id, "text_embedding",
                          lambda a: None).reshape(-1)
        prev = embeddings.text_embeddings.get(prompt_id)
        if prev is not None and (prev.shape != vec.shape or not np.array_equal(prev, vec)):
            raise InvariantViolation(clip_id, f"conflicting text_embedding for prompt {prompt_id}")
        embeddings.text_embeddings[prompt_id] = vec
    clip_pairs = []
    if "atomic_pairs" in record:
        pairs = embeddings.atomic_pairs.setdefault(prompt_id, [])
        for item in record["atomic_pairs"]:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise InvariantViolation(clip_id, "atomic_pairs entries must be [gt, out] path pairs")
            gt = _load_array(base_dir, item[0], clip_id, "atomic gt", lambda a: None).reshape(-1)
            out = _load_array(base_dir, item[1], clip_id, "atomic out", lambda a: None).reshape(-1)
            pairs.append((gt, out))
            clip_pairs.append((gt, out))

    strip_path = None
    if "strip" in record:
        strip_path = _resolve(base_dir, record["strip"])

    prompt_text = record.get("prompt_text")

    return ClipEntry(
        clip_id=clip_id,
        prompt_id=prompt_id,
        baseline_id=baseline_id,
        fps=fps,
        prompt_type=str(record.get("prompt_type", "default")),
        prompt_text=prompt_text,
        motion=motion,
        features=features,
        mesh=mesh,
        pose_distances=pose_distances,
        strip_path=strip_path,
        atomic_pairs=tuple(clip_pairs),
    )


def _check_embedding_dims(embeddings):
    dim = None
    where = None
    tables = [("text", embeddings.text_embeddings), ("motion", embeddings.motion_embeddings)]
    for kind, table in tables:
        for key, vec in table.items():
            if dim is None:
                dim, where = vec.shape[0], f"{kind}:{key}"
            elif vec.shape[0] != dim:
                raise InvariantViolation(key, f"{kind} embedding dim {vec.shape[0]} != {dim} (from {where})")
    # atomic pairs only need internal consistency per pair
    for prompt_id, pairs in embeddings.atomic_pairs.items():
        for gt, out in pairs:
            if gt.shape != out.shape:
                raise InvariantViolation(prompt_id, "atomic pair vectors differ in dimension")


def load_corpus(manifest_path, collect_errors=False):
    """Load and validate a corpus manifest.

    With collect_errors=False (default) the first invalid record raises and no
    corpus is returned. With collect_errors=True, returns (corpus, errors)
    where errors is a list of (clip_id, message) for records that failed
    validation; valid records are kept.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    try:
        records = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON ({exc})") from exc
    if not isinstance(records, dict):
        raise ManifestError(f"{manifest_path}: top level must map clip_id to records")

    base_dir = manifest_path.parent
    corpus = Corpus()
    errors = []
    for clip_id in sorted(records):
        embeddings_snapshot = (
            dict(corpus.embeddings.text_embeddings),
            dict(corpus.embeddings.motion_embeddings),
            {k: list(v) for k, v in corpus.embeddings.atomic_pairs.items()},
        )
        try:
            entry = _load_entry(clip_id, records[clip_id], base_dir, corpus.embeddings)
        except (InvariantViolation, MissingFile) as exc:
            # roll back any embedding side effects of the failed record
            corpus.embeddings.text_embeddings = embeddings_snapshot[0]
            corpus.embeddings.motion_embeddings = embeddings_snapshot[1]
            corpus.embeddings.atomic_pairs = embeddings_snapshot[2]
            if collect_errors:
                errors.append((clip_id, str(exc)))
                continue
            raise
        corpus.entries[clip_id] = entry

    _check_embedding_dims(corpus.embeddings)
    if collect_errors:
        return corpus, errors
    return corpus
