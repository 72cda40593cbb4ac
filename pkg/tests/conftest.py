"""Shared synthetic-motion builders and on-disk corpus helpers."""

import json

import numpy as np
import pytest

from motioneval.containers import NUM_JOINTS, FEATURE_DIM, MotionClip
from motioneval.npyio import save_npy


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.module.__name__ == "test_acceptance":
        terminal = item.config.pluginmanager.get_plugin("terminalreporter")
        if terminal is not None and (report.passed or report.failed):
            status = "PASS" if report.passed else "FAIL"
            terminal.write_line(f"ACCEPTANCE {status}: {item.name}")


def skeleton_frame(root=(0.0, 0.9, 0.0), left_foot=(0.1, 0.02, 0.0),
                   right_foot=(-0.1, 0.02, 0.0)):
    """One (22, 3) pose: root + feet where asked, other joints spread above ground."""
    frame = np.zeros((NUM_JOINTS, 3))
    for j in range(NUM_JOINTS):
        frame[j] = (0.01 * j, 0.5 + 0.02 * j, -0.01 * j)
    frame[0] = root
    frame[10] = left_foot
    frame[11] = right_foot
    return frame


def static_clip(num_frames=20, fps=20.0, **kwargs):
    frame = skeleton_frame(**kwargs)
    return MotionClip(np.repeat(frame[None, :, :], num_frames, axis=0), fps=fps,
                      clip_id="static")


def translated_clip(clip, offset):
    return MotionClip(clip.joints + np.asarray(offset, dtype=np.float64)[None, None, :],
                      fps=clip.fps, clip_id=clip.clip_id)


def walking_clip(num_frames=40, step=0.08, fps=20.0):
    """Scripted walk: feet alternate planted/swing phases, body advances steadily.

    The planted foot is pinned in world space while the other swings forward,
    so contacts alternate plausibly and nothing penetrates the ground.
    """
    joints = np.zeros((num_frames, NUM_JOINTS, 3))
    base = skeleton_frame()
    phase_len = 8
    left_pin = np.array([0.1, 0.02, 0.0])
    right_pin = np.array([-0.1, 0.02, 0.2])
    for t in range(num_frames):
        frame = base.copy()
        advance = step * t
        frame[:, 2] += advance
        phase = (t // phase_len) % 2
        if phase == 0:  # left planted, right swings
            frame[10] = left_pin
            frame[11] = right_pin + np.array([0.0, 0.08, step * (t % phase_len)])
        else:           # right planted, left swings
            frame[11] = right_pin
            frame[10] = left_pin + np.array([0.0, 0.08, step * (t % phase_len)])
        if (t + 1) % (2 * phase_len) == 0:
            left_pin = left_pin + np.array([0.0, 0.0, 2 * step * phase_len])
        if (t + 1 + phase_len) % (2 * phase_len) == 0:
            right_pin = right_pin + np.array([0.0, 0.0, 2 * step * phase_len])
        joints[t] = frame
    return MotionClip(joints, fps=fps, clip_id="walk")


def feature_rows(num_frames, rot_vel=0.0, vx=0.0, vz=0.0, height=0.9):
    feats = np.zeros((num_frames, FEATURE_DIM))
    feats[:, 0] = rot_vel
    feats[:, 1] = vx
    feats[:, 2] = vz
    feats[:, 3] = height
    return feats


class CorpusBuilder:
    """Writes NPY arrays + a manifest JSON under a base directory."""

    def __init__(self, base_dir):
        self.base_dir = base_dir
        self.records = {}

    def _write(self, name, array, dtype=np.float64):
        path = self.base_dir / name
        save_npy(path, np.asarray(array, dtype=dtype))
        return name

    def add_clip(self, clip_id, prompt_id="p0", baseline_id="b0", joints=None,
                 features=None, fps=20.0, **extra):
        record = {"prompt_id": prompt_id, "baseline_id": baseline_id, "fps": fps}
        if joints is not None:
            record["joints"] = self._write(f"{clip_id}_joints.npy", joints)
        if features is not None:
            record["features"] = self._write(f"{clip_id}_feats.npy", features)
        for key, value in extra.items():
            if key in ("vertices", "faces", "pose_distances", "motion_embedding",
                       "text_embedding"):
                dtype = np.float64
                record[key] = self._write(f"{clip_id}_{key}.npy", value, dtype=dtype)
            elif key == "atomic_pairs":
                paths = []
                for i, (gt, out) in enumerate(value):
                    paths.append([
                        self._write(f"{clip_id}_atomic{i}_gt.npy", gt),
                        self._write(f"{clip_id}_atomic{i}_out.npy", out),
                    ])
                record[key] = paths
            else:
                record[key] = value
        self.records[clip_id] = record
        return record

    def write_manifest(self, name="manifest.json"):
        path = self.base_dir / name
        path.write_text(json.dumps(self.records, indent=1))
        return path


@pytest.fixture
def corpus_builder(tmp_path):
    return CorpusBuilder(tmp_path)


FAKE_PNG = b"\x89PNG\r\n\x1a\n" + b"strip-image-bytes" * 4


def crossing_mesh_arrays():
    """Four triangles, exactly one interpenetrating non-adjacent pair."""
    vertices = np.array([
        [0.0, -1.0, -1.0], [0.0, -1.0, 1.0], [0.0, 1.5, 0.0],
        [-1.0, 0.5, 0.0], [1.0, 0.5, 0.0], [0.0, 0.5, 1.5],
        [50.0, 0.0, 0.0], [51.0, 0.0, 0.0], [50.0, 1.0, 0.0],
        [60.0, 0.0, 0.0], [61.0, 0.0, 0.0], [60.0, 1.0, 0.0],
    ])
    faces = np.array([[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11]])
    return vertices, faces


def build_full_corpus(base_dir, baselines=("alpha", "beta"), num_frames=60, seed=0):
    """Disk corpus with joints, features, embeddings, strips, targets, config."""
    import json as _json

    rng = np.random.default_rng(seed)
    builder = CorpusBuilder(base_dir)
    dim = 16
    prompts = {"p1": "Dynamics", "p2": "Accuracy"}
    text_emb = {pid: rng.standard_normal(dim) for pid in prompts}

    mean = rng.standard_normal(FEATURE_DIM)
    std = rng.uniform(0.5, 2.0, FEATURE_DIM)
    save_npy(base_dir / "mean.npy", mean)
    save_npy(base_dir / "std.npy", std)

    vertices, faces = crossing_mesh_arrays()

    for baseline in baselines:
        for prompt_id, prompt_type in prompts.items():
            for rep in range(2):
                clip_id = f"{baseline}_{prompt_id}_{rep}"
                clip = walking_clip(num_frames)
                jitter = rng.standard_normal(clip.joints.shape) * 0.002
                joints = clip.joints + jitter

                raw = feature_rows(num_frames, rot_vel=0.5 / max(num_frames - 30, 1),
                                   vz=0.05, height=0.9)
                raw = raw + rng.standard_normal(raw.shape) * 0.001
                normalized = (raw - mean) / std

                strip_path = base_dir / f"{clip_id}_strip.png"
                strip_path.write_bytes(FAKE_PNG)

                motion_vec = text_emb[prompt_id] + rng.standard_normal(dim) * 0.3
                gt_atom = rng.standard_normal(dim)
                out_atom = gt_atom + rng.standard_normal(dim) * 0.2

                extra = {
                    "prompt_type": prompt_type,
                    "prompt_text": f'a person performs action "{prompt_id}"',
                    "strip": strip_path.name,
                    "motion_embedding": motion_vec,
                    "text_embedding": text_emb[prompt_id],
                    "atomic_pairs": [(gt_atom, out_atom)],
                    "pose_distances": rng.uniform(0, 0.3, num_frames),
                    "features_normalized": True,
                }
                # every clip carries a mesh except one, exercising the
                # absent-metric path without starving selection
                if clip_id != "beta_p1_0":
                    extra["vertices"] = np.repeat(vertices[None, :, :], 2, axis=0)
                    extra["faces"] = faces.astype(np.float64)
                builder.add_clip(clip_id, prompt_id=prompt_id, baseline_id=baseline,
                                 joints=joints, features=normalized, fps=20.0, **extra)

    manifest = builder.write_manifest()

    (base_dir / "root_move.json").write_text(_json.dumps([
        {"prompt_id": "p1", "kind": "yaw_rotation", "angle": 0.5},
        {"prompt_id": "p2", "kind": "root_translation", "target": [0.0, 0.0, 1.4]},
        {"prompt_id": "p2", "kind": "directional_velocity", "speed": 1.0,
         "direction": [0, 0, 1], "duration": 1.5},
    ]))
    (base_dir / "body_part.json").write_text(_json.dumps([
        {"prompt_id": "p1", "kind": "body_part_offset", "base_joint": 0,
         "target_joint": 5, "offset": [0.0, 0.1, 0.0]},
    ]))

    config = {
        "manifest": manifest.name,
        "out_dir": "reports",
        "seed": 7,
        "jobs": 1,
        "stats": {"mean": "mean.npy", "std": "std.npy"},
        "targets": {"root_move": "root_move.json", "body_part": "body_part.json"},
        "bootstrap_replicates": 200,
        "mm_pairs": 50,
        "diversity_pairs": 50,
        "pool_size": 4,
        "flatten_length": 256,
    }
    config_path = base_dir / "config.json"
    config_path.write_text(_json.dumps(config, indent=1))
    return config_path
