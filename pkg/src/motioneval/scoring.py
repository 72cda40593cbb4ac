"""Normalizations, attribute scores, and best-per-prompt selection.

Physical score: percentile-clip each metric within the candidate population,
then a geometric mean under the published weights. Semantic score: weighted
sum of percentile-clip normalized metrics. Lower-is-better metrics flip
inside the clip normalization.
"""

import logging
import math

import numpy as np

from .errors import DegenerateRange, EmptyValues, MissingMetric, NoCandidates

log = logging.getLogger(__name__)

LOG_EPS = 1e-6           # inside the geometric mean, to avoid log(0)
LLM_SUBSCORE_MAX = 10.0  # physical plausibility normalizer

PHYSICAL_WEIGHTS = {
    "gp": 0.15,
    "fs": 0.15,
    "bp": 0.15,
    "jd": 0.15,
    "ff": 0.10,
    "pq": 0.10,
    "dd": 0.10,
    "pp": 0.10,  # judge physical-plausibility sub-score
}

SEMANTIC_WEIGHTS = {
    "ena": 0.1,
    "ac": 0.1,
    "moc": 0.1,
    "bpu": 0.1,
    "matching": 0.1,
    "r1": 0.1,
    "r2": 0.1,
    "r3": 0.1,
    "asr": 0.2,
}

# metric direction tags; anything not listed here is higher-is-better
LOWER_BETTER = frozenset({"jd", "gp", "ff", "fs", "bp", "matching"})

# judge sub-scores are rescaled to [0, 1] by their maxima before clipping
LLM_METRIC_MAX = {"ena": 10.0, "ac": 20.0, "moc": 10.0, "bpu": 10.0, "pp": 10.0}


def minmax_norm(value: float, lo: float, hi: float, reversed_: bool = False) -> float:
    """(v - lo) / (hi - lo), or (hi - v) / (hi - lo) when reversed; clipped to [0, 1]."""
    if hi <= lo:
        raise DegenerateRange(f"hi {hi} <= lo {lo}")
    scaled = (hi - value) / (hi - lo) if reversed_ else (value - lo) / (hi - lo)
    return float(min(1.0, max(0.0, scaled)))


def integer_bounded_range(values):
    """(floor(min), ceil(max)), widened to one unit when they coincide."""
    values = list(values)
    if not values:
        raise EmptyValues("integer_bounded_range over empty values")
    lo = math.floor(min(values))
    hi = math.ceil(max(values))
    if lo == hi:
        hi = lo + 1
    return lo, hi


def percentile(values, q: float) -> float:
    """Linear-interpolation percentile on the sorted values."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise EmptyValues("percentile over empty values")
    return float(np.percentile(values, q))


def percentile_clip_norm(value: float, p5: float, p95: float, lower_better: bool) -> float:
    """Clip-normalize against the P5..P95 band of the candidate population."""
    if p95 <= p5:
        raise DegenerateRange(f"p95 {p95} <= p5 {p5}")
    if lower_better:
        scaled = (p95 - value) / (p95 - p5)
    else:
        scaled = (value - p5) / (p95 - p5)
    return float(min(1.0, max(0.0, scaled)))


def physical_score(normalized, weights=None) -> float:
    """exp(sum_j w_j * ln(g_j + 1e-6)) over [0, 1] metric values."""
    weights = PHYSICAL_WEIGHTS if weights is None else weights
    total = 0.0
    for name, weight in weights.items():
        if name not in normalized:
            raise MissingMetric(name)
        total += weight * math.log(normalized[name] + LOG_EPS)
    return math.exp(total)


def semantic_score(normalized, weights=None) -> float:
    """Weighted sum of [0, 1] metric values."""
    weights = SEMANTIC_WEIGHTS if weights is None else weights
    total = 0.0
    for name, weight in weights.items():
        if name not in normalized:
            raise MissingMetric(name)
        total += weight * normalized[name]
    return float(total)


class MetricMatrix:
    """Candidate rows (one per generated clip) over named, direction-tagged metrics."""

    def __init__(self, directions=None):
        self.rows = []  # (clip_id, baseline_id, {metric: value})
        self.directions = dict(directions) if directions else {}

    def add_row(self, clip_id, baseline_id, values):
        self.rows.append((clip_id, baseline_id, dict(values)))

    def is_lower_better(self, metric):
        tag = self.directions.get(metric)
        if tag is not None:
            return tag == "lower_better"
        return metric in LOWER_BETTER

    def column(self, metric):
        return [row[2].get(metric) for row in self.rows]


def _normalize_rows(matrix: MetricMatrix, metric_names, llm_max=None):
    """Percentile-clip every metric within this matrix; unscoreable rows drop out.

    Judge sub-scores are divided by their maxima first. Returns
    {clip_id: {metric: g}} over rows carrying every requested metric.
    """
    llm_max = LLM_METRIC_MAX if llm_max is None else llm_max
    usable = []
    for clip_id, baseline_id, values in matrix.rows:
        missing = [m for m in metric_names if values.get(m) is None]
        if missing:
            log.info("selection: dropping %s (missing %s)", clip_id, ",".join(missing))
            continue
        usable.append((clip_id, baseline_id, values))
    if not usable:
        return {}

    transformed = {}
    for clip_id, _baseline, values in usable:
        transformed[clip_id] = {
            m: (values[m] / llm_max[m] if m in llm_max else values[m]) for m in metric_names
        }

    bands = {}
    for metric in metric_names:
        column = [transformed[cid][metric] for cid, _b, _v in usable]
        p5 = percentile(column, 5)
        p95 = percentile(column, 95)
        bands[metric] = (p5, p95)

    normalized = {}
    for clip_id, _baseline, _values in usable:
        g = {}
        for metric in metric_names:
            p5, p95 = bands[metric]
            x = transformed[clip_id][metric]
            if p95 <= p5:
                # flat column: every candidate ties, score it as neutral-best
                g[metric] = 1.0
            else:
                g[metric] = percentile_clip_norm(x, p5, p95, matrix.is_lower_better(metric))
        normalized[clip_id] = g
    return normalized


def make_physical_scorer(weights=None):
    """Scorer over MetricMatrix rows for the physical attribute score.

    The judge plausibility sub-score enters as x/10 directly; the seven
    kinematic metrics are percentile-clip normalized within the matrix.
    """
    weights = PHYSICAL_WEIGHTS if weights is None else weights
    clipped = [m for m in weights if m != "pp"]

    def scorer(matrix: MetricMatrix):
        normalized = _normalize_rows(matrix, clipped)
        scores = {}
        for clip_id, _baseline, values in matrix.rows:
            if clip_id not in normalized:
                continue
            if values.get("pp") is None:
                log.info("selection: dropping %s (missing pp)", clip_id)
                continue
            g = dict(normalized[clip_id])
            g["pp"] = values["pp"] / LLM_SUBSCORE_MAX
            scores[clip_id] = physical_score(g, weights)
        return scores

    return scorer


def make_semantic_scorer(weights=None):
    """Scorer over MetricMatrix rows for the semantic attribute score."""
    weights = SEMANTIC_WEIGHTS if weights is None else weights
    names = list(weights)

    def scorer(matrix: MetricMatrix):
        normalized = _normalize_rows(matrix, names)
        return {clip_id: semantic_score(g, weights) for clip_id, g in normalized.items()}

    return scorer


def select_best(per_prompt, scorer):
    """Argmax of the scorer per prompt.

    per_prompt: {prompt_id: MetricMatrix}. Ties break toward the
    lexicographically smallest (baseline_id, clip_id). Returns
    {prompt_id: (clip_id, score)} in sorted prompt order.
    """
    selection = {}
    for prompt_id in sorted(per_prompt):
        matrix = per_prompt[prompt_id]
        scores = scorer(matrix)
        if not scores:
            raise NoCandidates(prompt_id)
        keyed = {}
        for clip_id, baseline_id, _values in matrix.rows:
            if clip_id in scores:
                keyed[clip_id] = (baseline_id, clip_id)
        # largest score wins; equal scores fall to the smallest (baseline, clip) key
        best = None
        for clip_id in scores:
            if best is None:
                best = clip_id
                continue
            if scores[clip_id] > scores[best]:
                best = clip_id
            elif scores[clip_id] == scores[best] and keyed[clip_id] < keyed[best]:
                best = clip_id
        selection[prompt_id] = (best, scores[best])
    return selection
