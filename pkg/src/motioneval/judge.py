"""Vision-LLM judging of rendered motion strips.

Assembles the rubric prompt around a pre-rendered spatial-temporal strip
image, calls an OpenAI-compatible chat-completions endpoint, and validates
the structured verdict. Responses that parse but contradict the verdict
bands are quarantined (BandMismatch), never silently rewritten.
"""

import base64
import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import (
    BandMismatch,
    Misaligned,
    OutOfRange,
    RateLimited,
    SchemaViolation,
    TransportError,
)

API_KEY_ENV = "T2M_JUDGE_API_KEY"

SUBSCORE_MAX = {
    "extra_non_instruction_actions": 10,
    "action_completeness": 20,
    "multi_stage_order_correctness": 10,
    "body_part_understanding": 10,
    "physical_plausibility": 10,
}
SUBSCORE_ORDER = tuple(SUBSCORE_MAX)
OVERALL_MAX = 60
ALIGNED_MIN = 50
PARTIAL_MIN = 30
MAX_NOTE_CHARS = 200

JUDGE_PROMPT_TEMPLATE = """You are a motion alignment evaluator. Compare sequential frames with the provided motion prompt. Because only provided frames are available, judge solely by body motion. Ignore scenery, props, missing equipment, or environment differences. Treat the prompt as a list of action keywords and constraints (e.g., kick, pull, jump, push, rotate, crouch, left/right, direction, speed). Slowly scan every frame and concentrate on limb paths, joint angles, body orientation, tempo changes, and transitions.

The video is represented as a single long horizontal strip image. This strip is constructed by concatenating evenly sampled frames from left to right in strict temporal order:
* The leftmost region corresponds to the beginning of the motion and the rightmost region corresponds to the end.
When you analyze the motion, mentally scan the strip from left to right as if time is progressing, and focus on how the body pose and joint angles evolve along this horizontal axis.
The virtual camera is fixed in space. If the person becomes smaller, they are moving away; if larger, moving closer. At the initial state the person is facing the camera frontally.

Video Name: {video_name_escaped}
Motion Prompt Text: \"\"\"{prompt_text_escaped}\"\"\"

Body-part color coding (for visual reference only):
(1) Head/scalp: pure red; (2) Face: orange; (3) Torso: bright yellow; (4) Left arm: pure green; (5) Right arm: cyan; (6) Left leg: pure blue; (7) Right leg: bright purple; (8) Left hand: light green; (9) Right hand: light gray.

====================================================================
 1) EXTRA NON-INSTRUCTION ACTIONS (10 points)
* 9-10: No obvious extra actions; motion stays on-instruction
* 5-8: Minor extra gestures/steps that do not dominate the sequence
* 0-4: Clear extra actions that change meaning or add major unintended motions

 2) ACTION COMPLETENESS (20 points)
* 18-20: All key action components appear clearly and sufficiently
* 10-17: Partial coverage; some components weak/short/missing
* 0-9: Most key actions missing, contradictory, or not recognizable

 3) MULTI-STAGE ORDER CORRECTNESS (10 points)
* 9-10: Correct order and clear stage boundaries
* 5-8: Order mostly correct but some stage confusion/overlap
* 0-4: Wrong order or stages not present

 4) BODY-PART UNDERSTANDING (10 points)
* 9-10: Correct body-part usage and orientation
* 5-8: Partially correct; occasional confusion
* 0-4: Mostly incorrect (e.g., wrong side/limb/direction)

 5) PHYSICAL PLAUSIBILITY(10 points)
* 9-10: Physically plausible, anatomically clean, and smooth/coherent throughout
* 5-8: Mostly acceptable with minor issues (small balance slips, jitter)
* 0-4: Major issues (teleporting, broken joints, jarring discontinuities)

====================================================================
 FINAL SCORING RULE
Compute: overall_score = sum of all 5 sub-scores (0-60)
Verdict: "aligned" (50-60), "partial" (30-49), "mismatch" (0-29)

====================================================================
OUTPUT FORMAT
Return ONLY the following raw JSON:
{{
  "video_name": "{video_name_escaped}",
  "prompt_name": "string",
  "scores": {{
    "extra_non_instruction_actions": int,
    "action_completeness": int,
    "multi_stage_order_correctness": int,
    "body_part_understanding": int,
    "physical_plausibility": int
  }},
  "overall_score": int,
  "verdict": "aligned" | "partial" | "mismatch",
  "frame_observation": "<=200 chars",
  "prompt_overlap": "<=200 chars",
  "issues_found": "<=200 chars"
}}
Important:
* Base judgment on visible evidence. Ignore background/props.
* Output plain JSON only. Do NOT wrap in markdown code blocks.
"""

_CONTROL_CHARS = re.compile(r"[\x00-\x1f\x7f]")
_FENCE = re.compile(r"^\s*```(?:json)?\s*(.*?)\s*```\s*$", re.DOTALL)


@dataclass(frozen=True)
class JudgeRequest:
    video_name: str
    prompt_text: str
    strip_image: bytes
    media_type: str = "image/png"
    model_name: str = ""
    endpoint: str = ""
    timeout: float = 60.0

    def __post_init__(self):
        if not self.prompt_text:
            raise SchemaViolation("prompt_text", "empty")
        if not self.strip_image:
            raise SchemaViolation("strip_image", "empty")


@dataclass(frozen=True)
class JudgeResult:
    video_name: str
    prompt_name: str
    scores: dict  # sub-score name -> int
    overall_score: int
    verdict: str
    frame_observation: str = ""
    prompt_overlap: str = ""
    issues_found: str = ""

    def score_vector(self):
        return np.array([self.scores[name] for name in SUBSCORE_ORDER], dtype=np.float64)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    factor: float = 2.0
    sleep: callable = field(default=time.sleep, repr=False)

    def delay(self, attempt):
        return self.base_delay * self.factor ** attempt


def escape_field(text: str) -> str:
    """Double quotes, strip control characters; keeps the template raw-JSON safe."""
    return _CONTROL_CHARS.sub("", str(text)).replace('"', '""')


def build_prompt(video_name: str, prompt_text: str) -> str:
    """Rubric prompt with the clip name and instruction text substituted."""
    return JUDGE_PROMPT_TEMPLATE.format(
        video_name_escaped=escape_field(video_name),
        prompt_text_escaped=escape_field(prompt_text),
    )


def verdict_for(overall: int) -> str:
    """Band mapping: aligned 50-60, partial 30-49, mismatch 0-29."""
    if not 0 <= overall <= OVERALL_MAX:
        raise OutOfRange(f"overall {overall}")
    if overall >= ALIGNED_MIN:
        return "aligned"
    if overall >= PARTIAL_MIN:
        return "partial"
    return "mismatch"


def _require_int(obj, key, parent):
    if key not in obj:
        raise SchemaViolation(f"{parent}{key}", "missing")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaViolation(f"{parent}{key}", f"not an integer: {value!r}")
    return value


def _require_str(obj, key, max_len=None):
    if key not in obj:
        raise SchemaViolation(key, "missing")
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaViolation(key, f"not a string: {value!r}")
    if max_len is not None and len(value) > max_len:
        raise SchemaViolation(key, f"{len(value)} chars > {max_len}")
    return value


def parse_judge_response(text: str, strict: bool = False) -> JudgeResult:
    """Validate the structured verdict; raises SchemaViolation / BandMismatch.

    Models routinely wrap the JSON in a markdown fence despite the
    instruction; the default mode tolerates that, strict mode rejects it.
    """
    payload = text
    fenced = _FENCE.match(text)
    if fenced:
        if strict:
            raise SchemaViolation("response", "markdown code fence in strict mode")
        payload = fenced.group(1)
    try:
        obj = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("response", f"not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise SchemaViolation("response", "top level must be an object")

    scores_obj = obj.get("scores")
    if not isinstance(scores_obj, dict):
        raise SchemaViolation("scores", "missing or not an object")
    scores = {}
    for name, max_score in SUBSCORE_MAX.items():
        value = _require_int(scores_obj, name, "scores.")
        if not 0 <= value <= max_score:
            raise SchemaViolation(f"scores.{name}", f"{value} outside 0-{max_score}")
        scores[name] = value

    overall = _require_int(obj, "overall_score", "")
    if not 0 <= overall <= OVERALL_MAX:
        raise SchemaViolation("overall_score", f"{overall} outside 0-{OVERALL_MAX}")
    if overall != sum(scores.values()):
        raise SchemaViolation("overall_score", f"{overall} != sum of sub-scores {sum(scores.values())}")

    verdict = _require_str(obj, "verdict")
    if verdict not in ("aligned", "partial", "mismatch"):
        raise SchemaViolation("verdict", f"unknown verdict {verdict!r}")

    result = JudgeResult(
        video_name=_require_str(obj, "video_name") if "video_name" in obj else "",
        prompt_name=_require_str(obj, "prompt_name") if "prompt_name" in obj else "",
        scores=scores,
        overall_score=overall,
        verdict=verdict,
        frame_observation=_require_str(obj, "frame_observation", MAX_NOTE_CHARS) if "frame_observation" in obj else "",
        prompt_overlap=_require_str(obj, "prompt_overlap", MAX_NOTE_CHARS) if "prompt_overlap" in obj else "",
        issues_found=_require_str(obj, "issues_found", MAX_NOTE_CHARS) if "issues_found" in obj else "",
    )
    if verdict_for(overall) != verdict:
        raise BandMismatch(overall, verdict)
    return result


def _request_payload(req: JudgeRequest) -> dict:
    image_b64 = base64.b64encode(req.strip_image).decode("ascii")
    return {
        "model": req.model_name,
        "messages": [
            {"role": "system", "content": build_prompt(req.video_name, req.prompt_text)},
            {
                "role": "user",
                "content": [
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:{req.media_type};base64,{image_b64}"},
                    }
                ],
            },
        ],
        "temperature": 0,
    }


def submit(req: JudgeRequest, retry: RetryPolicy = RetryPolicy(), api_key: str | None = None,
           session=None, strict: bool = False) -> JudgeResult:
    """One judged clip.

    Retries transport failures and HTTP 429/5xx with exponential backoff;
    validation failures (SchemaViolation, BandMismatch) are never retried.
    """
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    post = (session or requests).post
    payload = _request_payload(req)

    last_status = None
    last_error = None
    for attempt in range(retry.max_attempts):
        if attempt:
            retry.sleep(retry.delay(attempt - 1))
        try:
            response = post(req.endpoint, json=payload, headers=headers, timeout=req.timeout)
        except requests.RequestException as exc:
            last_error = exc
            last_status = None
            continue
        last_status = response.status_code
        if response.status_code == 429 or response.status_code >= 500:
            continue
        if response.status_code != 200:
            raise TransportError(f"HTTP {response.status_code} from {req.endpoint}")
        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise SchemaViolation("response", f"malformed completion body ({exc})") from exc
        return parse_judge_response(content, strict=strict)

    if last_status == 429:
        raise RateLimited(f"{req.endpoint}: 429 after {retry.max_attempts} attempts")
    raise TransportError(
        f"{req.endpoint}: failed after {retry.max_attempts} attempts "
        f"(last status={last_status}, error={last_error})"
    )


def judge_clips(requests_by_clip, concurrency: int = 4, retry: RetryPolicy = RetryPolicy(),
                api_key: str | None = None, strict: bool = False):
    """Judge many clips with at most `concurrency` requests in flight.

    requests_by_clip: {clip_id: JudgeRequest}. Returns (results, quarantined,
    failures), each a dict keyed by clip_id, ordered by clip_id regardless of
    completion order.
    """
    results, quarantined, failures = {}, {}, {}

    def _one(clip_id):
        return submit(requests_by_clip[clip_id], retry=retry, api_key=api_key, strict=strict)

    clip_ids = sorted(requests_by_clip)
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        futures = {clip_id: pool.submit(_one, clip_id) for clip_id in clip_ids}
        for clip_id in clip_ids:
            try:
                results[clip_id] = futures[clip_id].result()
            except BandMismatch as exc:
                quarantined[clip_id] = exc
            except (SchemaViolation, TransportError, RateLimited) as exc:
                failures[clip_id] = exc
    return results, quarantined, failures


def llm_selection_gap(llm_scores, human_scores):
    """Per-dimension mean |llm - human| over aligned prompt lists.

    llm_scores: [(prompt_id, JudgeResult or 5-vector)], human_scores:
    [(prompt_id, 5-vector)] in the sub-score order extra/completeness/order/
    body-part/plausibility. Returns a 5-vector.
    """
    if len(llm_scores) != len(human_scores):
        raise Misaligned(f"{len(llm_scores)} llm vs {len(human_scores)} human entries")
    gaps = []
    for (llm_id, llm_val), (human_id, human_val) in zip(llm_scores, human_scores):
        if llm_id != human_id:
            raise Misaligned(f"prompt {llm_id!r} vs {human_id!r}")
        vec = llm_val.score_vector() if isinstance(llm_val, JudgeResult) else np.asarray(llm_val, dtype=np.float64)
        human_vec = np.asarray(human_val, dtype=np.float64)
        if vec.shape != (5,) or human_vec.shape != (5,):
            raise Misaligned(f"prompt {llm_id!r}: scores must be 5-vectors")
        gaps.append(np.abs(vec - human_vec))
    if not gaps:
        raise Misaligned("empty score lists")
    return np.mean(gaps, axis=0)
