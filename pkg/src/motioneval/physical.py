"""Physical-quality metrics over joint clips, meshes and pose-distance series.

All velocities/accelerations are per-frame differences (meters/frame), not
per-second; "local" quantities subtract the root (joint 0) position frame by
frame. Every (frame, joint) sample counts toward the averages.
"""

from dataclasses import dataclass

import numpy as np

from . import bvh as bvh_mod
from .containers import MeshSequence, MotionClip, PoseDistanceSeries
from .contact import ContactConfig, detect_contacts, floating_intervals
from .errors import EmptySeries, TooShort

GROUND_TOLERANCE = 0.005   # meters (5 mm) below the floor before it counts
SLIDE_EPS = 1e-6           # numerical stability term in the sliding denominator
POSE_QUALITY_SCALE = 10.0


@dataclass(frozen=True)
class PhysicalReport:
    """Per-clip metric values; None marks a metric whose input was absent."""

    clip_id: str = ""
    jd: float | None = None  # m/frame^2
    gp: float | None = None  # meters
    ff: float | None = None  # fraction of frames
    fs: float | None = None  # m/frame
    dd: float | None = None  # m/frame
    pq: float | None = None  # unitless x10
    bp: float | None = None  # percent

    def as_dict(self):
        return {"jd": self.jd, "gp": self.gp, "ff": self.ff, "fs": self.fs,
                "dd": self.dd, "pq": self.pq, "bp": self.bp}


def _local_positions(joints):
    return joints - joints[:, :1, :]


def jitter_degree(clip: MotionClip) -> float:
    """Mean global + root-relative acceleration magnitude per (frame, joint)."""
    joints = clip.joints
    if joints.shape[0] < 3:
        raise TooShort(f"jitter_degree needs T >= 3, got {joints.shape[0]}")
    accel_global = np.diff(joints, n=2, axis=0)
    accel_local = np.diff(_local_positions(joints), n=2, axis=0)
    total = np.linalg.norm(accel_global, axis=-1) + np.linalg.norm(accel_local, axis=-1)
    return float(total.mean())


def ground_penetration(clip: MotionClip, tolerance: float = GROUND_TOLERANCE,
                       literal_tolerance: bool = False) -> float:
    """Mean |height| of samples penetrating the floor, over all T*J samples.

    Default counts heights below -tolerance (penetration beyond 5 mm).
    literal_tolerance=True keeps the raw reading height < +tolerance, which
    also penalizes samples resting just above the floor.
    """
    heights = clip.joints[..., 1]
    cutoff = tolerance if literal_tolerance else -tolerance
    mask = heights < cutoff
    if not mask.any():
        return 0.0
    return float(np.abs(heights[mask]).sum() / heights.size)


def foot_floating(clip: MotionClip, cfg: ContactConfig = ContactConfig()) -> float:
    """(invalid frames + half the soft-floating frames + mass-floating frames) / T."""
    if clip.num_frames < 2:
        raise TooShort(f"foot_floating needs T >= 2, got {clip.num_frames}")
    track = detect_contacts(clip, cfg)
    n_invalid, soft, hard = floating_intervals(track, cfg)
    return float((n_invalid + 0.5 * sum(soft) + sum(hard)) / clip.num_frames)


def foot_sliding(clip: MotionClip, cfg: ContactConfig = ContactConfig()) -> float:
    """Contact-weighted mean horizontal foot speed, averaged over both feet."""
    if clip.num_frames < 2:
        raise TooShort(f"foot_sliding needs T >= 2, got {clip.num_frames}")
    track = detect_contacts(clip, cfg)
    per_foot = []
    for contact, speed in ((track.left_contact, track.left_speed),
                           (track.right_contact, track.right_speed)):
        num = float((speed * contact).sum())
        den = float(contact.sum()) + SLIDE_EPS
        per_foot.append(num / den)
    return float(sum(per_foot) / 2.0)


def dynamic_degree(clip: MotionClip) -> float:
    """Mean global + root-relative velocity magnitude per (frame, joint)."""
    joints = clip.joints
    if joints.shape[0] < 2:
        raise TooShort(f"dynamic_degree needs T >= 2, got {joints.shape[0]}")
    vel_global = np.diff(joints, axis=0)
    vel_local = np.diff(_local_positions(joints), axis=0)
    total = np.linalg.norm(vel_global, axis=-1) + np.linalg.norm(vel_local, axis=-1)
    return float(total.mean())


def pose_quality(series: PoseDistanceSeries) -> float:
    """10 x mean precomputed pose-manifold distance."""
    if series.distances.size == 0:
        raise EmptySeries(series.clip_id or "<pose-distances>")
    return float(POSE_QUALITY_SCALE * series.distances.mean())


def body_penetration(mesh: MeshSequence) -> float:
    """Mean percent of intersecting non-adjacent triangle pairs per frame."""
    num_faces = mesh.num_faces
    total = 0.0
    for frame in range(mesh.num_frames):
        tree = bvh_mod.build(mesh.vertices[frame], mesh.faces)
        total += bvh_mod.count_colliding_pairs(tree) / num_faces * 100.0
    return float(total / mesh.num_frames)


def evaluate_clip(entry, cfg: ContactConfig = ContactConfig(),
                  literal_ground_tolerance: bool = False) -> PhysicalReport:
    """All available physical metrics for one corpus entry."""
    jd = gp = ff = fs = dd = pq = bp = None
    if entry.motion is not None:
        clip = entry.motion
        if clip.num_frames >= 3:
            jd = jitter_degree(clip)
        gp = ground_penetration(clip, literal_tolerance=literal_ground_tolerance)
        if clip.num_frames >= 2:
            ff = foot_floating(clip, cfg)
            fs = foot_sliding(clip, cfg)
            dd = dynamic_degree(clip)
    if entry.pose_distances is not None and entry.pose_distances.distances.size:
        pq = pose_quality(entry.pose_distances)
    if entry.mesh is not None:
        bp = body_penetration(entry.mesh)
    return PhysicalReport(clip_id=entry.clip_id, jd=jd, gp=gp, ff=ff, fs=fs, dd=dd, pq=pq, bp=bp)
