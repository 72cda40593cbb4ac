"""Root trajectory recovery from 263-dim features plus angle primitives.

Feature channel layout (HumanML/MDM convention):
    0     root yaw angular velocity, radians per frame
    1, 2  root-local horizontal linear velocity (x, z), meters per frame
    3     root height (y), meters

Recovery is gauge-fixed: the track starts at the horizontal origin with zero
yaw. Integration turns first, then steps: the velocity stored at frame t-1 is
rotated by the yaw already accumulated at frame t before being added.
"""

from dataclasses import dataclass

import numpy as np

from .containers import DEFAULT_FPS, FeatureClip, FeatureStats, MotionClip
from .errors import AlreadyDenormalized, DimensionMismatch, NormalizedInput


@dataclass(frozen=True)
class RootTrack:
    """Root positions (T, 3) and unwrapped yaw (T,); yaw None for joint-derived tracks."""

    positions: np.ndarray
    yaw: np.ndarray | None = None
    fps: float = DEFAULT_FPS

    @property
    def num_frames(self):
        return self.positions.shape[0]


def denormalize(fc: FeatureClip, stats: FeatureStats) -> FeatureClip:
    """Invert feature normalization: x * std + mean."""
    if not fc.normalized:
        raise AlreadyDenormalized(fc.clip_id or "<features>")
    if fc.features.shape[1] != stats.mean.shape[0]:
        raise DimensionMismatch(f"features dim {fc.features.shape[1]} vs stats dim {stats.mean.shape[0]}")
    raw = fc.features * stats.std + stats.mean
    return FeatureClip(raw, normalized=False, clip_id=fc.clip_id)


def recover_root(fc: FeatureClip, fps: float = DEFAULT_FPS) -> RootTrack:
    """Integrate root yaw and horizontal displacement from feature channels."""
    if fc.normalized:
        raise NormalizedInput(fc.clip_id or "<features>")
    feats = fc.features
    num_frames = feats.shape[0]

    yaw = np.zeros(num_frames)
    if num_frames > 1:
        yaw[1:] = np.cumsum(feats[:-1, 0])

    positions = np.zeros((num_frames, 3))
    positions[:, 1] = feats[:, 3]
    if num_frames > 1:
        vx = feats[:-1, 1]
        vz = feats[:-1, 2]
        cos_y = np.cos(yaw[1:])
        sin_y = np.sin(yaw[1:])
        step_x = cos_y * vx + sin_y * vz
        step_z = -sin_y * vx + cos_y * vz
        positions[1:, 0] = np.cumsum(step_x)
        positions[1:, 2] = np.cumsum(step_z)

    return RootTrack(positions=positions, yaw=yaw, fps=fps)


def root_track_from_joints(clip: MotionClip) -> RootTrack:
    """Root positions straight from joint 0; yaw is not recoverable here."""
    return RootTrack(positions=np.array(clip.joints[:, 0, :]), yaw=None, fps=clip.fps)


def wrap_angle(theta):
    """Wrap angle(s) to [-pi, pi)."""
    wrapped = np.mod(np.asarray(theta, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(wrapped)
    return wrapped


def yaw_matrix(theta: float) -> np.ndarray:
    """Rotation about +Y: rows ((cos, 0, sin), (0, 1, 0), (-sin, 0, cos))."""
    c = np.cos(theta)
    s = np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
