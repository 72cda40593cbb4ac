"""Semantic-alignment and generalizability metrics over precomputed embeddings.

All randomized statistics are seeded and bitwise reproducible: per-prompt
substreams derive from sha256(master seed, prompt_id), so results do not
depend on evaluation order or parallelism.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadK,
    DimensionMismatch,
    EmptyCorpus,
    EmptyValues,
    InsufficientOutputs,
    ZeroVector,
)

ASR_THRESHOLD = 0.6      # cosine similarity must exceed this
POOL_SIZE = 32           # 1 matched motion + 31 distractors
DEFAULT_REPLICATES = 1000


@dataclass(frozen=True)
class StatSummary:
    mean: float
    half_width: float
    replicates: int
    seed: int


@dataclass(frozen=True)
class RetrievalPool:
    """One anchor text embedding vs a candidate list; gt_index marks the match."""

    anchor: np.ndarray
    candidates: tuple  # ((clip_id, vector), ...)
    gt_index: int


def derive_seed(master_seed, *parts):
    """Stable 64-bit substream seed from the master seed and string parts."""
    h = hashlib.sha256(str(int(master_seed)).encode())
    for part in parts:
        h.update(b"\x00")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def matching_score(text_vec, motion_vec) -> float:
    """Euclidean distance between text and motion features."""
    t = np.asarray(text_vec, dtype=np.float64).reshape(-1)
    a = np.asarray(motion_vec, dtype=np.float64).reshape(-1)
    if t.shape != a.shape:
        raise DimensionMismatch(f"{t.shape} vs {a.shape}")
    return float(np.linalg.norm(t - a))


def pool_hit(pool: RetrievalPool, k: int) -> bool:
    """True when the ground-truth candidate ranks in the top k by distance."""
    if not 1 <= k <= len(pool.candidates):
        raise BadK(f"k={k} for pool of {len(pool.candidates)}")
    vectors = np.stack([vec for _cid, vec in pool.candidates])
    dists = np.linalg.norm(vectors - pool.anchor[None, :], axis=1)
    ranked = np.argsort(dists, kind="stable")  # ties keep candidate list order
    return int(np.nonzero(ranked == pool.gt_index)[0][0]) < k


def r_precision(pools, k: int) -> float:
    """Fraction of pools whose ground truth lands in the top k."""
    if not pools:
        raise EmptyValues("no retrieval pools")
    hits = sum(pool_hit(pool, k) for pool in pools)
    return hits / len(pools)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ZeroVector(f"norms {na:.3g}, {nb:.3g}")
    return float(np.dot(a, b) / (na * nb))


def asr(pairs, threshold: float = ASR_THRESHOLD) -> float:
    """Recall of atomic-action pairs with cosine similarity above threshold."""
    if not pairs:
        raise EmptyValues("no atomic-action pairs")
    if not 0.0 < threshold < 1.0:
        raise BadK(f"threshold {threshold} outside (0, 1)")
    hits = sum(cosine_similarity(gt, out) > threshold for gt, out in pairs)
    return hits / len(pairs)


def multimodality(per_prompt_outputs, pairs: int, seed: int,
                  replicates: int = DEFAULT_REPLICATES) -> StatSummary:
    """Mean distance between random distinct output pairs, averaged over prompts.

    Prompts are processed in sorted order with independent derived seeds;
    half_width is a bootstrap over per-prompt means.
    """
    if not per_prompt_outputs:
        raise EmptyCorpus("no prompts")
    prompt_means = []
    for prompt_id in sorted(per_prompt_outputs):
        outputs = np.stack([np.asarray(v, dtype=np.float64).reshape(-1)
                            for v in per_prompt_outputs[prompt_id]])
        count = outputs.shape[0]
        if count < 2:
            raise InsufficientOutputs(f"prompt {prompt_id} has {count} outputs")
        rng = np.random.default_rng(derive_seed(seed, "mm", prompt_id))
        first = rng.integers(0, count, size=pairs)
        second = rng.integers(0, count - 1, size=pairs)
        second += second >= first  # uniform over distinct pairs
        dists = np.linalg.norm(outputs[first] - outputs[second], axis=1)
        prompt_means.append(float(dists.mean()))
    summary = bootstrap(prompt_means, replicates=max(replicates, 100),
                        seed=derive_seed(seed, "mm-bootstrap"))
    return StatSummary(mean=summary.mean, half_width=summary.half_width,
                       replicates=summary.replicates, seed=seed)


def diversity(all_outputs, pairs: int, seed: int,
              replicates: int = DEFAULT_REPLICATES) -> StatSummary:
    """Mean distance between two sampled groups of outputs.

    Draws two disjoint groups of size `pairs` when enough outputs exist,
    otherwise two independent with-replacement draws.
    """
    outputs = [np.asarray(v, dtype=np.float64).reshape(-1) for v in all_outputs]
    if not outputs:
        raise EmptyCorpus("no outputs")
    stacked = np.stack(outputs)
    rng = np.random.default_rng(derive_seed(seed, "diversity"))
    n = stacked.shape[0]
    if n >= 2 * pairs:
        perm = rng.permutation(n)
        first, second = perm[:pairs], perm[pairs:2 * pairs]
    else:
        first = rng.integers(0, n, size=pairs)
        second = rng.integers(0, n, size=pairs)
    dists = np.linalg.norm(stacked[first] - stacked[second], axis=1)
    summary = bootstrap(dists, replicates=max(replicates, 100),
                        seed=derive_seed(seed, "diversity-bootstrap"))
    return StatSummary(mean=summary.mean, half_width=summary.half_width,
                       replicates=summary.replicates, seed=seed)


def bootstrap(values, replicates: int = DEFAULT_REPLICATES, seed: int = 0) -> StatSummary:
    """Mean of values; half_width = std of seeded resample means."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise EmptyValues("bootstrap over empty values")
    if replicates < 100:
        raise EmptyValues(f"replicates {replicates} < 100")
    rng = np.random.default_rng(seed)
    # resample in row-aligned chunks to bound memory on large value lists;
    # the generator stream (and thus the result) is identical to one big draw
    rows_per_chunk = max(1, int(4_000_000 // max(values.size, 1)))
    replicate_means = np.empty(replicates)
    done = 0
    while done < replicates:
        rows = min(rows_per_chunk, replicates - done)
        idx = rng.integers(0, values.size, size=(rows, values.size))
        replicate_means[done:done + rows] = values[idx].mean(axis=1)
        done += rows
    half_width = float(replicate_means.std(ddof=1))
    return StatSummary(mean=float(values.mean()), half_width=half_width,
                       replicates=int(replicates), seed=int(seed))


def build_retrieval_pools(motion_embeddings, text_embeddings, clip_prompts,
                          pool_size: int = POOL_SIZE, seed: int = 0):
    """One pool per clip that has both its motion and its prompt's text embedding.

    Distractors are motion embeddings of clips with other prompts, sampled
    without replacement from a derived stream per clip; the ground truth is
    placed at a seeded position so rank ties are not systematically biased.
    Returns {clip_id: RetrievalPool} in sorted clip order.
    """
    pools = {}
    for clip_id in sorted(motion_embeddings):
        prompt_id = clip_prompts.get(clip_id)
        anchor = text_embeddings.get(prompt_id) if prompt_id is not None else None
        if anchor is None:
            continue
        others = [cid for cid in sorted(motion_embeddings)
                  if cid != clip_id and clip_prompts.get(cid) != prompt_id]
        take = min(pool_size - 1, len(others))
        rng = np.random.default_rng(derive_seed(seed, "pool", clip_id))
        chosen = [others[int(i)] for i in rng.choice(len(others), size=take, replace=False)] if take else []
        gt_index = int(rng.integers(take + 1))
        candidates = [(cid, motion_embeddings[cid]) for cid in chosen]
        candidates.insert(gt_index, (clip_id, motion_embeddings[clip_id]))
        pools[clip_id] = RetrievalPool(anchor=anchor, candidates=tuple(candidates), gt_index=gt_index)
    return pools


def flatten_motion(array, length: int) -> np.ndarray:
    """Row-concatenate a (T, ...) array, truncated/zero-padded to `length`."""
    flat = np.asarray(array, dtype=np.float64).reshape(-1)
    if flat.size >= length:
        return flat[:length]
    out = np.zeros(length)
    out[:flat.size] = flat
    return out
