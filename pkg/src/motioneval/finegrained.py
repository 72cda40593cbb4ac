"""Fine-grained accuracy protocols: whole-body root control and body-part offsets.

Whole-body errors compare the recovered root track between t0 = 0 and the
evaluation frame t_e = min(T-1, max(0, T-N)); body-part errors are an RMSE
over the last N frames (all frames when T < N). N defaults to 30.
"""

from dataclasses import dataclass

import numpy as np

from .containers import MotionClip, TargetSpec
from .errors import BadJoints, TooShort, UnresolvedPrompt, WindowOutOfRange
from .rootkin import RootTrack, denormalize, recover_root, root_track_from_joints, wrap_angle, yaw_matrix

DEFAULT_WINDOW = 30

KIND_ORDER = ("yaw_rotation", "directional_velocity", "root_translation", "body_part_offset")


@dataclass(frozen=True)
class AccuracyResult:
    prompt_id: str
    kind: str
    error: float
    frames_used: tuple  # (t0, t_e) or (window_start, T-1)
    degenerate_window: bool = False
    clip_id: str = ""
    baseline_id: str = ""


def eval_window(num_frames: int, window: int = DEFAULT_WINDOW):
    """(t0, t_e) with t0 = 0 and t_e = min(T-1, max(0, T-N))."""
    t_e = min(num_frames - 1, max(0, num_frames - window))
    return 0, t_e


def rotation_error(track: RootTrack, yaw_target: float, window=None,
                   num_frames_window: int = DEFAULT_WINDOW) -> float:
    """Frobenius distance between achieved and target yaw rotation matrices."""
    if track.yaw is None:
        raise BadJoints("track has no yaw channel; rotation needs feature-recovered roots")
    t0, t_e = window if window is not None else eval_window(track.num_frames, num_frames_window)
    if t_e >= track.num_frames or t0 < 0:
        raise WindowOutOfRange(f"(t0, t_e)=({t0}, {t_e}) for {track.num_frames} frames")
    delta = wrap_angle(track.yaw[t_e] - track.yaw[t0])
    return float(np.linalg.norm(yaw_matrix(delta) - yaw_matrix(yaw_target), ord="fro"))


def velocity_error(track: RootTrack, speed_target: float, direction, duration: float,
                   fps: float) -> float:
    """|mean projected speed - target| over the first round(duration * fps) frames."""
    if track.num_frames < 2:
        raise TooShort(f"velocity needs T >= 2, got {track.num_frames}")
    direction = np.asarray(direction, dtype=np.float64).reshape(3)
    # half-away-from-zero rounding of the duration in frames
    t_d = min(track.num_frames - 1, int(np.floor(duration * fps + 0.5)))
    if t_d < 1:
        raise TooShort(f"duration {duration}s at {fps} fps spans no frames")
    vel = (track.positions[1:t_d + 1] - track.positions[:t_d]) * fps
    mean_speed = float((vel @ direction).mean())
    return abs(mean_speed - speed_target)


def translation_error(track: RootTrack, translation_target, window=None,
                      num_frames_window: int = DEFAULT_WINDOW) -> float:
    """3D RMSE between achieved and target root displacement."""
    t0, t_e = window if window is not None else eval_window(track.num_frames, num_frames_window)
    if t_e >= track.num_frames or t0 < 0:
        raise WindowOutOfRange(f"(t0, t_e)=({t0}, {t_e}) for {track.num_frames} frames")
    target = np.asarray(translation_target, dtype=np.float64).reshape(3)
    delta = track.positions[t_e] - track.positions[t0]
    return float(np.sqrt(np.sum((delta - target) ** 2) / 3.0))


def body_part_error(clip: MotionClip, spec: TargetSpec,
                    window: int = DEFAULT_WINDOW) -> float:
    """RMSE of (target joint - base joint) against the target offset, last N frames."""
    if spec.kind != "body_part_offset":
        raise BadJoints(f"spec kind {spec.kind!r}")
    num_joints = clip.num_joints
    base, goal = spec.base_joint, spec.target_joint
    if base is None or goal is None or not (0 <= base < num_joints) or not (0 <= goal < num_joints) or base == goal:
        raise BadJoints(f"joints ({base}, {goal}) invalid for {num_joints}-joint clip")
    start = max(0, clip.num_frames - window)
    rel = clip.joints[start:, goal, :] - clip.joints[start:, base, :]
    err = rel - np.asarray(spec.offset_target, dtype=np.float64).reshape(3)
    return float(np.sqrt((np.linalg.norm(err, axis=1) ** 2).mean()))


def _track_for_entry(entry, stats, kind):
    """Feature-recovered root track when possible, joint root fallback otherwise."""
    if entry.features is not None:
        fc = entry.features
        if fc.normalized:
            if stats is None:
                raise UnresolvedPrompt(entry.prompt_id,
                                       f"clip {entry.clip_id} has normalized features but no stats given")
            fc = denormalize(fc, stats)
        return recover_root(fc, fps=entry.fps)
    if entry.motion is not None and kind in ("directional_velocity", "root_translation"):
        return root_track_from_joints(entry.motion)
    raise UnresolvedPrompt(entry.prompt_id,
                           f"clip {entry.clip_id} lacks inputs for kind {kind}")


def evaluate_case(entry, spec: TargetSpec, stats=None, window: int = DEFAULT_WINDOW) -> AccuracyResult:
    """One (clip, target) error."""
    kind = spec.kind
    if kind == "body_part_offset":
        if entry.motion is None:
            raise UnresolvedPrompt(spec.prompt_id, f"clip {entry.clip_id} has no joints")
        clip = entry.motion
        start = max(0, clip.num_frames - window)
        error = body_part_error(clip, spec, window)
        return AccuracyResult(prompt_id=spec.prompt_id, kind=kind, error=error,
                              frames_used=(start, clip.num_frames - 1),
                              degenerate_window=clip.num_frames < window,
                              clip_id=entry.clip_id, baseline_id=entry.baseline_id)

    track = _track_for_entry(entry, stats, kind)
    t0, t_e = eval_window(track.num_frames, window)
    degenerate = t_e == 0
    if kind == "yaw_rotation":
        error = rotation_error(track, spec.yaw_target, window=(t0, t_e))
    elif kind == "directional_velocity":
        error = velocity_error(track, spec.speed_target, spec.direction, spec.duration, track.fps)
        t_d = min(track.num_frames - 1, int(np.floor(spec.duration * track.fps + 0.5)))
        t0, t_e = 0, t_d
        degenerate = False
    else:  # root_translation
        error = translation_error(track, spec.translation_target, window=(t0, t_e))
    return AccuracyResult(prompt_id=spec.prompt_id, kind=kind, error=error,
                          frames_used=(t0, t_e), degenerate_window=degenerate,
                          clip_id=entry.clip_id, baseline_id=entry.baseline_id)


def evaluate_targets(corpus, targets, stats=None, window: int = DEFAULT_WINDOW):
    """Per-(baseline, kind) mean errors across all targets.

    Every target prompt must resolve to at least one clip per baseline.
    When a prompt maps to several clips of one baseline, the per-case error
    is their mean. Returns (table, cases) where table maps
    baseline_id -> {kind: mean error} and cases is the flat AccuracyResult list.
    """
    by_prompt = corpus.by_prompt()
    baselines = corpus.baseline_ids()
    cases = []
    sums = {b: {k: [] for k in KIND_ORDER} for b in baselines}

    for spec in targets:
        entries = by_prompt.get(spec.prompt_id)
        if not entries:
            raise UnresolvedPrompt(spec.prompt_id, "no clips for prompt")
        per_baseline = {}
        for entry in entries:
            per_baseline.setdefault(entry.baseline_id, []).append(entry)
        for baseline in baselines:
            if baseline not in per_baseline:
                raise UnresolvedPrompt(spec.prompt_id, f"no clip for baseline {baseline}")
            errors = []
            for entry in sorted(per_baseline[baseline], key=lambda e: e.clip_id):
                result = evaluate_case(entry, spec, stats=stats, window=window)
                cases.append(result)
                errors.append(result.error)
            sums[baseline][spec.kind].append(float(np.mean(errors)))

    table = {}
    for baseline in baselines:
        table[baseline] = {
            kind: (float(np.mean(vals)) if vals else None)
            for kind, vals in sums[baseline].items()
        }
    return table, cases
