"""Foot contact states and floating intervals.

Shared substrate for Foot Sliding and Foot Floating. Thresholds are plain
conventions, not learned quantities; every report records the config used.

A foot is in contact at frame t when it is both low (height below h_contact)
and slow (3D displacement below v_contact meters/frame). Velocities use
forward differences; the last frame repeats the previous one so every
per-frame series has length T.
"""

from dataclasses import dataclass

import numpy as np

from .containers import MotionClip
from .errors import InvariantViolation, TooShort

EPS = 1e-6


@dataclass(frozen=True)
class ContactConfig:
    h_contact: float = 0.05   # meters: foot height below this may touch ground
    v_contact: float = 0.01   # meters/frame: displacement below this is "planted"
    h_float: float = 0.12     # meters: min foot height above this is mass floating
    r_min: float = 0.1        # feet gliding with the root when ratio drops below
    l_min: int = 5            # frames: shortest run that counts as an interval
    left_foot: int = 10       # HumanML skeleton indices
    right_foot: int = 11

    def __post_init__(self):
        for name in ("h_contact", "v_contact", "h_float", "r_min"):
            if getattr(self, name) <= 0:
                raise InvariantViolation("<contact-config>", f"{name} must be positive")
        if self.l_min < 1:
            raise InvariantViolation("<contact-config>", "l_min must be >= 1")


@dataclass(frozen=True)
class ContactTrack:
    left_contact: np.ndarray    # (T,) {0,1}
    right_contact: np.ndarray   # (T,) {0,1}
    left_height: np.ndarray     # (T,) meters
    right_height: np.ndarray    # (T,) meters
    left_speed: np.ndarray      # (T,) horizontal meters/frame
    right_speed: np.ndarray     # (T,) horizontal meters/frame
    velocity_ratio: np.ndarray  # (T,) |v_feet - v_root| / (|v_root| + eps)

    @property
    def num_frames(self):
        return self.left_contact.shape[0]


def _padded_velocity(positions):
    """Forward differences, last frame repeated: (T, ..., 3)."""
    vel = np.empty_like(positions)
    vel[:-1] = positions[1:] - positions[:-1]
    vel[-1] = vel[-2]
    return vel


def detect_contacts(clip: MotionClip, cfg: ContactConfig = ContactConfig()) -> ContactTrack:
    """Per-frame binary contact states plus the floating-detection signals."""
    if clip.num_frames < 2:
        raise TooShort(f"{clip.clip_id or '<clip>'}: need T >= 2, got {clip.num_frames}")

    feet = clip.joints[:, [cfg.left_foot, cfg.right_foot], :]  # (T, 2, 3)
    heights = feet[..., 1]
    vel = _padded_velocity(feet)                               # (T, 2, 3)
    speed3d = np.linalg.norm(vel, axis=-1)
    contact = (heights < cfg.h_contact) & (speed3d < cfg.v_contact)

    horiz_speed = np.linalg.norm(vel[..., [0, 2]], axis=-1)

    root_vel = _padded_velocity(clip.joints[:, 0, :])          # (T, 3)
    feet_vel = vel.mean(axis=1)                                # mean of both feet
    rel = feet_vel - root_vel
    ratio = np.linalg.norm(rel, axis=-1) / (np.linalg.norm(root_vel, axis=-1) + EPS)

    return ContactTrack(
        left_contact=contact[:, 0].astype(np.uint8),
        right_contact=contact[:, 1].astype(np.uint8),
        left_height=heights[:, 0],
        right_height=heights[:, 1],
        left_speed=horiz_speed[:, 0],
        right_speed=horiz_speed[:, 1],
        velocity_ratio=ratio,
    )


def _runs(mask):
    """Maximal runs of True: list of (start, length)."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(mask) - start))
    return runs


def floating_intervals(track: ContactTrack, cfg: ContactConfig = ContactConfig()):
    """Classify frames once each, precedence hard > soft > invalid.

    Returns (n_invalid, soft_lengths, hard_lengths):
      hard    = run of >= l_min frames with min foot height above h_float
      soft    = run of >= l_min frames with min foot height in (h_contact, h_float]
      invalid = remaining frames with neither foot in contact and the feet
                gliding with the root (velocity ratio < r_min)
    """
    min_h = np.minimum(track.left_height, track.right_height)
    contact_any = (track.left_contact | track.right_contact).astype(bool)

    hard_mask = min_h > cfg.h_float
    soft_mask = (min_h > cfg.h_contact) & (min_h <= cfg.h_float)
    invalid_mask = (~contact_any) & (track.velocity_ratio < cfg.r_min)

    claimed = np.zeros(len(min_h), dtype=bool)
    hard_lengths = []
    for start, length in _runs(hard_mask):
        if length >= cfg.l_min:
            hard_lengths.append(length)
            claimed[start:start + length] = True
    soft_lengths = []
    for start, length in _runs(soft_mask):
        if length >= cfg.l_min:
            soft_lengths.append(length)
            claimed[start:start + length] = True

    n_invalid = int(np.count_nonzero(invalid_mask & ~claimed))
    return n_invalid, soft_lengths, hard_lengths
