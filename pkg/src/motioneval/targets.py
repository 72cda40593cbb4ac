"""Target-specification files for fine-grained accuracy evaluation.

Two files share one record format, distinguished by "kind":

    root_move.json   -- whole-body targets
      {"prompt_id": "p1", "kind": "yaw_rotation", "angle": 1.7453}
      {"prompt_id": "p2", "kind": "directional_velocity",
       "speed": 2.0, "direction": [0, 0, 1], "duration": 1.5}
      {"prompt_id": "p3", "kind": "root_translation", "target": [0, 0, -2.8]}

    body_part.json   -- relative body-part targets
      {"prompt_id": "p4", "kind": "body_part_offset",
       "base_joint": 15, "target_joint": 21, "offset": [0, 0, 0.15]}

Angles are radians, lengths meters, speeds m/s.
"""

import json
from pathlib import Path

import numpy as np

from .containers import NUM_JOINTS, TARGET_KINDS, TargetSpec
from .errors import InvariantViolation, MissingField, MissingFile, NonUnitDirection, UnknownKind

# directions within this of unit length are renormalized, farther ones rejected
DIRECTION_SLACK = 1e-3


def _require(record, kind, name):
    if name not in record:
        raise MissingField(f"{kind} record needs {name!r}")
    return record[name]


def _vector3(value, name):
    vec = np.asarray(value, dtype=np.float64).reshape(-1)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)):
        raise MissingField(f"{name} must be a finite 3-vector, got {value!r}")
    return vec


def parse_target(record):
    """Parse one JSON record into a TargetSpec."""
    kind = record.get("kind")
    if kind not in TARGET_KINDS:
        raise UnknownKind(f"kind {kind!r}")
    prompt_id = str(record.get("prompt_id", ""))

    if kind == "yaw_rotation":
        angle = float(_require(record, kind, "angle"))
        return TargetSpec(kind=kind, prompt_id=prompt_id, yaw_target=angle)

    if kind == "directional_velocity":
        speed = float(_require(record, kind, "speed"))
        direction = _vector3(_require(record, kind, "direction"), "direction")
        duration = float(_require(record, kind, "duration"))
        norm = float(np.linalg.norm(direction))
        if abs(norm - 1.0) >= DIRECTION_SLACK:
            raise NonUnitDirection(f"direction norm {norm:.6f}")
        direction = direction / norm
        if duration <= 0:
            raise MissingField("duration must be > 0")
        return TargetSpec(kind=kind, prompt_id=prompt_id, speed_target=speed,
                          direction=direction, duration=duration)

    if kind == "root_translation":
        target = _vector3(_require(record, kind, "target"), "target")
        return TargetSpec(kind=kind, prompt_id=prompt_id, translation_target=target)

    # body_part_offset
    base = int(_require(record, kind, "base_joint"))
    goal = int(_require(record, kind, "target_joint"))
    offset = _vector3(_require(record, kind, "offset"), "offset")
    if not (0 <= base < NUM_JOINTS) or not (0 <= goal < NUM_JOINTS):
        raise InvariantViolation(prompt_id or "<target>", f"joint indices ({base}, {goal}) outside 0..{NUM_JOINTS - 1}")
    if base == goal:
        raise InvariantViolation(prompt_id or "<target>", "base_joint equals target_joint")
    return TargetSpec(kind=kind, prompt_id=prompt_id, base_joint=base,
                      target_joint=goal, offset_target=offset)


def load_targets(path):
    """Load a target file (JSON array of records) into TargetSpec objects."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    records = json.loads(path.read_text())
    if not isinstance(records, list):
        raise MissingField(f"{path}: expected a JSON array of target records")
    return [parse_target(record) for record in records]
