"""Command-line entry point.

Subcommands: eval-physical, eval-semantic, eval-finegrained, judge,
score-select. All take --config plus optional --jobs/--seed/--out/--strict
overrides. Exit codes: 0 success, 1 configuration error, 2 data error
(valid rows are still reported), 3 network failure.

Reports are byte-identical across reruns and across --jobs settings: work
fans out per clip, results reduce in clip_id order, and all randomness is
seeded.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import physical, semantic
from .config import load_config
from .containers import FeatureStats
from .corpus import load_corpus
from .errors import (
    ConfigError,
    ManifestError,
    MissingFile,
    MotionEvalError,
    NoCandidates,
    RateLimited,
    TransportError,
    UnresolvedPrompt,
)
from .finegrained import KIND_ORDER, evaluate_case
from .judge import API_KEY_ENV, JudgeRequest, judge_clips
from .npyio import load_npy
from .reporting import read_json_report, write_csv, write_json_report
from .scoring import (
    LOWER_BETTER,
    MetricMatrix,
    integer_bounded_range,
    make_physical_scorer,
    make_semantic_scorer,
    minmax_norm,
    select_best,
)
from .targets import load_targets

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NETWORK = 3

PHYSICAL_COLUMNS = ("jd", "gp", "ff", "fs", "dd", "pq", "bp")

FINEGRAINED_COLUMNS = {
    "yaw_rotation": "root_rotation",
    "directional_velocity": "root_velocity",
    "root_translation": "root_translation",
    "body_part_offset": "body_part_translation",
}


def _pool_map(jobs, func, keys):
    """Apply func over keys with a worker pool; results keyed, order-free."""
    if jobs <= 1:
        return {key: func(key) for key in keys}
    results = {}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {key: pool.submit(func, key) for key in keys}
        for key in keys:
            results[key] = futures[key].result()
    return results


def _load_corpus_or_exit(cfg):
    if cfg.manifest is None:
        raise ConfigError("config has no manifest path")
    return load_corpus(cfg.manifest, collect_errors=True)


def _stats(cfg):
    if cfg.stats_mean is None:
        return None
    return FeatureStats(load_npy(cfg.stats_mean), load_npy(cfg.stats_std))


# ---------------------------------------------------------------------------
# eval-physical
# ---------------------------------------------------------------------------

def cmd_eval_physical(cfg):
    corpus, errors = _load_corpus_or_exit(cfg)
    if len(corpus) == 0 and not errors:
        raise ConfigError("no clips in manifest")

    def run_one(clip_id):
        entry = corpus.entries[clip_id]
        return physical.evaluate_clip(entry, cfg.contact, literal_ground_tolerance=cfg.strict)

    reports = _pool_map(cfg.jobs, run_one, corpus.clip_ids())

    rows = []
    group_values = {}
    for clip_id in corpus.clip_ids():
        entry = corpus.entries[clip_id]
        report = reports[clip_id]
        row = {"clip_id": clip_id, "prompt_id": entry.prompt_id,
               "baseline_id": entry.baseline_id, "prompt_type": entry.prompt_type}
        row.update(report.as_dict())
        rows.append(row)
        key = (entry.prompt_type, entry.baseline_id)
        bucket = group_values.setdefault(key, {m: [] for m in PHYSICAL_COLUMNS})
        for metric, value in report.as_dict().items():
            if value is not None:
                bucket[metric].append(value)

    groups = []
    for (prompt_type, baseline_id) in sorted(group_values):
        bucket = group_values[(prompt_type, baseline_id)]
        group = {"prompt_type": prompt_type, "baseline_id": baseline_id}
        for metric in PHYSICAL_COLUMNS:
            group[metric] = float(np.mean(bucket[metric])) if bucket[metric] else None
            group[f"{metric}_count"] = len(bucket[metric])
        groups.append(group)

    payload = {
        "config": cfg.effective(),
        "rows": rows,
        "groups": groups,
        "errors": [{"clip_id": cid, "reason": reason} for cid, reason in errors],
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json_report(cfg.out_dir / "physical_report.json", payload)
    write_csv(
        cfg.out_dir / "physical_report.csv",
        ("clip_id",) + PHYSICAL_COLUMNS,
        [[row["clip_id"]] + [row[m] for m in PHYSICAL_COLUMNS] for row in rows],
        config=cfg.effective(),
    )
    return EXIT_DATA if errors else EXIT_OK


# ---------------------------------------------------------------------------
# eval-semantic
# ---------------------------------------------------------------------------

def _motion_vector(entry, embeddings, flatten_length):
    vec = embeddings.motion_embeddings.get(entry.clip_id)
    if vec is not None:
        return vec
    if entry.features is not None:
        return semantic.flatten_motion(entry.features.features, flatten_length)
    if entry.motion is not None:
        return semantic.flatten_motion(entry.motion.joints, flatten_length)
    return None


def cmd_eval_semantic(cfg):
    corpus, errors = _load_corpus_or_exit(cfg)
    if len(corpus) == 0 and not errors:
        raise ConfigError("no clips in manifest")
    emb = corpus.embeddings

    clip_prompts = {entry.clip_id: entry.prompt_id for entry in corpus}
    pools = semantic.build_retrieval_pools(
        emb.motion_embeddings, emb.text_embeddings, clip_prompts,
        pool_size=cfg.pool_size, seed=cfg.seed,
    )

    rows = []
    per_baseline = {}
    for clip_id in corpus.clip_ids():
        entry = corpus.entries[clip_id]
        text_vec = emb.text_embeddings.get(entry.prompt_id)
        motion_vec = emb.motion_embeddings.get(clip_id)
        matching = (semantic.matching_score(text_vec, motion_vec)
                    if text_vec is not None and motion_vec is not None else None)
        hits = {}
        pool = pools.get(clip_id)
        for k in (1, 2, 3):
            hits[k] = (1.0 if semantic.pool_hit(pool, min(k, len(pool.candidates))) else 0.0) if pool else None
        pair_list = entry.atomic_pairs
        clip_asr = semantic.asr(pair_list, cfg.asr_threshold) if pair_list else None
        rows.append({
            "clip_id": clip_id, "prompt_id": entry.prompt_id,
            "baseline_id": entry.baseline_id, "prompt_type": entry.prompt_type,
            "matching": matching, "r1": hits[1], "r2": hits[2], "r3": hits[3],
            "asr": clip_asr,
        })
        per_baseline.setdefault(entry.baseline_id, []).append(entry)

    aggregates = []
    for baseline_id in sorted(per_baseline):
        entries = per_baseline[baseline_id]
        agg = {"baseline_id": baseline_id}
        seed = semantic.derive_seed(cfg.seed, "aggregate", baseline_id)
        collected = {
            "matching": [r["matching"] for r in rows
                         if r["baseline_id"] == baseline_id and r["matching"] is not None],
            "r1": [r["r1"] for r in rows if r["baseline_id"] == baseline_id and r["r1"] is not None],
            "r2": [r["r2"] for r in rows if r["baseline_id"] == baseline_id and r["r2"] is not None],
            "r3": [r["r3"] for r in rows if r["baseline_id"] == baseline_id and r["r3"] is not None],
        }
        for name, values in collected.items():
            if values:
                summary = semantic.bootstrap(values, replicates=cfg.bootstrap_replicates,
                                             seed=semantic.derive_seed(seed, name))
                agg[name] = summary.mean
                agg[f"{name}_half_width"] = summary.half_width
            else:
                agg[name] = None
                agg[f"{name}_half_width"] = None

        pair_indicator = []
        for entry in entries:
            for gt, out in entry.atomic_pairs:
                pair_indicator.append(
                    1.0 if semantic.cosine_similarity(gt, out) > cfg.asr_threshold else 0.0)
        if pair_indicator:
            summary = semantic.bootstrap(pair_indicator, replicates=cfg.bootstrap_replicates,
                                         seed=semantic.derive_seed(seed, "asr"))
            agg["asr"] = summary.mean
            agg["asr_half_width"] = summary.half_width
        else:
            agg["asr"] = None
            agg["asr_half_width"] = None

        vectors = {}
        for entry in entries:
            vec = _motion_vector(entry, emb, cfg.flatten_length)
            if vec is not None:
                vectors.setdefault(entry.prompt_id, []).append(vec)
        multi_prompts = {pid: vs for pid, vs in vectors.items() if len(vs) >= 2}
        if multi_prompts:
            summary = semantic.multimodality(multi_prompts, pairs=cfg.mm_pairs,
                                             seed=semantic.derive_seed(seed, "mm"),
                                             replicates=cfg.bootstrap_replicates)
            agg["mm"] = summary.mean
            agg["mm_half_width"] = summary.half_width
        else:
            agg["mm"] = None
            agg["mm_half_width"] = None
        all_vectors = [v for vs in vectors.values() for v in vs]
        if all_vectors:
            summary = semantic.diversity(all_vectors, pairs=cfg.diversity_pairs,
                                         seed=semantic.derive_seed(seed, "diversity"),
                                         replicates=cfg.bootstrap_replicates)
            agg["diversity"] = summary.mean
            agg["diversity_half_width"] = summary.half_width
        else:
            agg["diversity"] = None
            agg["diversity_half_width"] = None
        aggregates.append(agg)

    payload = {
        "config": cfg.effective(),
        "rows": rows,
        "aggregates": aggregates,
        "errors": [{"clip_id": cid, "reason": reason} for cid, reason in errors],
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json_report(cfg.out_dir / "semantic_report.json", payload)
    agg_columns = ("baseline_id", "matching", "matching_half_width", "r1", "r1_half_width",
                   "r2", "r2_half_width", "r3", "r3_half_width", "asr", "asr_half_width",
                   "mm", "mm_half_width", "diversity", "diversity_half_width")
    write_csv(
        cfg.out_dir / "semantic_report.csv",
        agg_columns,
        [[agg[c] for c in agg_columns] for agg in aggregates],
        config=cfg.effective(),
    )
    return EXIT_DATA if errors else EXIT_OK


# ---------------------------------------------------------------------------
# eval-finegrained
# ---------------------------------------------------------------------------

def finegrained_table_rows(table):
    """Fixed-order rows for the fine-grained RMSE table (4-decimal cells)."""
    rows = []
    for baseline_id in sorted(table):
        means = table[baseline_id]
        rows.append([baseline_id] + [means.get(kind) for kind in KIND_ORDER])
    return rows


def cmd_eval_finegrained(cfg):
    corpus, errors = _load_corpus_or_exit(cfg)
    if len(corpus) == 0 and not errors:
        raise ConfigError("no clips in manifest")
    if cfg.root_move is None and cfg.body_part is None:
        raise ConfigError("no target files configured")
    targets = []
    for path in (cfg.root_move, cfg.body_part):
        if path is not None:
            if not path.is_file():
                raise ConfigError(f"target file not found: {path}")
            targets.extend(load_targets(path))
    if not targets:
        raise ConfigError("target files contain no records")

    stats = _stats(cfg)
    by_prompt = corpus.by_prompt()
    baselines = corpus.baseline_ids()

    def run_case(args):
        entry, spec = args
        return evaluate_case(entry, spec, stats=stats, window=cfg.window)

    case_inputs = []
    case_errors = []
    for t_index, spec in enumerate(targets):
        entries = by_prompt.get(spec.prompt_id, [])
        grouped = {}
        for entry in entries:
            grouped.setdefault(entry.baseline_id, []).append(entry)
        for baseline_id in baselines:
            if baseline_id not in grouped:
                case_errors.append({"prompt_id": spec.prompt_id, "baseline_id": baseline_id,
                                    "reason": "unresolved prompt"})
                continue
            for entry in sorted(grouped[baseline_id], key=lambda e: e.clip_id):
                case_inputs.append((t_index, entry, spec))

    results = _pool_map(cfg.jobs, lambda i: run_case((case_inputs[i][1], case_inputs[i][2])),
                        list(range(len(case_inputs))))

    sums = {b: {k: [] for k in KIND_ORDER} for b in baselines}
    per_target = {}
    cases = []
    for i in sorted(results):
        t_index, entry, spec = case_inputs[i]
        result = results[i]
        cases.append({
            "prompt_id": result.prompt_id, "kind": result.kind, "clip_id": result.clip_id,
            "baseline_id": result.baseline_id, "error": result.error,
            "frames_used": list(result.frames_used),
            "degenerate_window": result.degenerate_window,
        })
        per_target.setdefault((t_index, entry.baseline_id), []).append(result.error)
    for (t_index, baseline_id), errs in per_target.items():
        sums[baseline_id][targets[t_index].kind].append(float(np.mean(errs)))

    table = {}
    for baseline_id in baselines:
        table[baseline_id] = {
            kind: (float(np.mean(vals)) if vals else None)
            for kind, vals in sums[baseline_id].items()
        }

    payload = {
        "config": cfg.effective(),
        "table": table,
        "cases": cases,
        "errors": [{"clip_id": e[0], "reason": e[1]} for e in errors] + case_errors,
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json_report(cfg.out_dir / "finegrained_report.json", payload)
    write_csv(
        cfg.out_dir / "finegrained_report.csv",
        ("baseline",) + tuple(FINEGRAINED_COLUMNS[k] for k in KIND_ORDER),
        finegrained_table_rows(table),
        config=cfg.effective(),
        decimals=4,
    )
    return EXIT_DATA if (errors or case_errors) else EXIT_OK


# ---------------------------------------------------------------------------
# judge
# ---------------------------------------------------------------------------

_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg",
                ".webp": "image/webp"}


def cmd_judge(cfg):
    corpus, errors = _load_corpus_or_exit(cfg)
    if not cfg.judge.endpoint:
        raise ConfigError("judge endpoint not configured")

    requests_by_clip = {}
    skipped = []
    for entry in corpus:
        if entry.strip_path is None or not entry.prompt_text:
            skipped.append({"clip_id": entry.clip_id, "reason": "no strip image or prompt text"})
            continue
        media = _MEDIA_TYPES.get(entry.strip_path.suffix.lower(), "image/png")
        requests_by_clip[entry.clip_id] = JudgeRequest(
            video_name=entry.clip_id,
            prompt_text=entry.prompt_text,
            strip_image=entry.strip_path.read_bytes(),
            media_type=media,
            model_name=cfg.judge.model,
            endpoint=cfg.judge.endpoint,
            timeout=cfg.judge.timeout,
        )
    if not requests_by_clip:
        raise ConfigError("no clips with strip images and prompt text")

    results, quarantined, failures = judge_clips(
        requests_by_clip,
        concurrency=cfg.judge.concurrency,
        retry=cfg.judge.retry,
        api_key=os.environ.get(API_KEY_ENV),
        strict=cfg.strict,
    )

    rows = []
    group_scores = {}
    for clip_id in sorted(results):
        entry = corpus.entries[clip_id]
        res = results[clip_id]
        rows.append({
            "clip_id": clip_id, "prompt_id": entry.prompt_id,
            "baseline_id": entry.baseline_id, "prompt_type": entry.prompt_type,
            "scores": dict(res.scores), "overall_score": res.overall_score,
            "verdict": res.verdict, "frame_observation": res.frame_observation,
            "prompt_overlap": res.prompt_overlap, "issues_found": res.issues_found,
        })
        key = (entry.baseline_id, entry.prompt_type)
        group_scores.setdefault(key, []).append(res.overall_score)

    aggregate = []
    for (baseline_id, prompt_type) in sorted(group_scores):
        values = group_scores[(baseline_id, prompt_type)]
        aggregate.append({
            "baseline_id": baseline_id, "prompt_type": prompt_type,
            "mean_overall": float(np.mean(values)), "count": len(values),
        })

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json_report(cfg.out_dir / "judge_results.json", {
        "config": cfg.effective(),
        "rows": rows,
        "skipped": skipped,
        "errors": ([{"clip_id": cid, "reason": reason} for cid, reason in errors]
                   + [{"clip_id": cid, "reason": str(exc)} for cid, exc in sorted(failures.items())]),
    })
    write_json_report(cfg.out_dir / "judge_quarantine.json", {
        "config": cfg.effective(),
        "rows": [{"clip_id": cid, "reason": str(exc)} for cid, exc in sorted(quarantined.items())],
    })
    write_json_report(cfg.out_dir / "judge_aggregate.json", {
        "config": cfg.effective(),
        "groups": aggregate,
    })
    write_csv(
        cfg.out_dir / "judge_aggregate.csv",
        ("baseline_id", "prompt_type", "mean_overall", "count"),
        [[g["baseline_id"], g["prompt_type"], g["mean_overall"], g["count"]] for g in aggregate],
        config=cfg.effective(),
    )

    if any(isinstance(exc, (TransportError, RateLimited)) for exc in failures.values()):
        return EXIT_NETWORK
    if failures or errors:
        return EXIT_DATA
    return EXIT_OK


# ---------------------------------------------------------------------------
# score-select
# ---------------------------------------------------------------------------

def _report_path(cfg, name, default_name):
    if name in cfg.report_paths:
        return cfg.report_paths[name]
    return cfg.out_dir / default_name


def cmd_score_select(cfg):
    physical_path = _report_path(cfg, "physical", "physical_report.json")
    semantic_path = _report_path(cfg, "semantic", "semantic_report.json")
    judge_path = _report_path(cfg, "judge", "judge_results.json")
    for path in (physical_path, semantic_path, judge_path):
        if not path.is_file():
            raise ConfigError(f"missing input report: {path}")

    physical_rows = {r["clip_id"]: r for r in read_json_report(physical_path)["rows"]}
    semantic_rows = {r["clip_id"]: r for r in read_json_report(semantic_path)["rows"]}
    judge_rows = {r["clip_id"]: r for r in read_json_report(judge_path)["rows"]}

    prompts = {}
    for clip_id in sorted(set(physical_rows) | set(semantic_rows) | set(judge_rows)):
        meta = physical_rows.get(clip_id) or semantic_rows.get(clip_id) or judge_rows.get(clip_id)
        prompts.setdefault(meta["prompt_id"], []).append(clip_id)

    phys_matrices = {}
    sem_matrices = {}
    for prompt_id, clip_ids in prompts.items():
        phys = MetricMatrix()
        sem = MetricMatrix()
        for clip_id in clip_ids:
            prow = physical_rows.get(clip_id) or {}
            jrow = judge_rows.get(clip_id) or {}
            srow = semantic_rows.get(clip_id) or {}
            baseline_id = (prow or srow or jrow).get("baseline_id", "")
            jscores = jrow.get("scores") or {}
            phys.add_row(clip_id, baseline_id, {
                "jd": prow.get("jd"), "gp": prow.get("gp"), "ff": prow.get("ff"),
                "fs": prow.get("fs"), "dd": prow.get("dd"), "pq": prow.get("pq"),
                "bp": prow.get("bp"), "pp": jscores.get("physical_plausibility"),
            })
            sem.add_row(clip_id, baseline_id, {
                "ena": jscores.get("extra_non_instruction_actions"),
                "ac": jscores.get("action_completeness"),
                "moc": jscores.get("multi_stage_order_correctness"),
                "bpu": jscores.get("body_part_understanding"),
                "matching": srow.get("matching"), "r1": srow.get("r1"),
                "r2": srow.get("r2"), "r3": srow.get("r3"), "asr": srow.get("asr"),
            })
        phys_matrices[prompt_id] = phys
        sem_matrices[prompt_id] = sem

    selection = {}
    select_errors = []
    for label, matrices, scorer in (
        ("physical", phys_matrices, make_physical_scorer()),
        ("semantic", sem_matrices, make_semantic_scorer()),
    ):
        for prompt_id in sorted(matrices):
            try:
                chosen = select_best({prompt_id: matrices[prompt_id]}, scorer)
            except NoCandidates:
                select_errors.append({"prompt_id": prompt_id, "attribute": label,
                                      "reason": "no scoreable candidates"})
                continue
            clip_id, score = chosen[prompt_id]
            selection.setdefault(prompt_id, {})[label] = {"clip_id": clip_id, "score": score}

    radar = _radar_rows(physical_rows, semantic_rows, judge_rows)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json_report(cfg.out_dir / "selection_manifest.json", {
        "config": cfg.effective(),
        "selection": selection,
        "errors": select_errors,
    })
    selection_rows = []
    for prompt_id in sorted(selection):
        for label in ("physical", "semantic"):
            if label in selection[prompt_id]:
                pick = selection[prompt_id][label]
                selection_rows.append([prompt_id, label, pick["clip_id"], pick["score"]])
    write_csv(cfg.out_dir / "selection_manifest.csv",
              ("prompt_id", "attribute", "clip_id", "score"),
              selection_rows, config=cfg.effective())
    write_csv(cfg.out_dir / "radar_data.csv",
              ("metric", "baseline_id", "value", "normalized"),
              radar, config=cfg.effective())
    return EXIT_DATA if select_errors else EXIT_OK


def _radar_rows(physical_rows, semantic_rows, judge_rows):
    """Per-baseline metric means, min-max normalized over the integer-bounded
    range (reversed for lower-is-better metrics)."""
    per_metric = {}

    def feed(metric, baseline_id, value):
        if value is not None and baseline_id:
            per_metric.setdefault(metric, {}).setdefault(baseline_id, []).append(float(value))

    for row in physical_rows.values():
        for metric in PHYSICAL_COLUMNS:
            feed(metric, row.get("baseline_id", ""), row.get(metric))
    for row in semantic_rows.values():
        for metric in ("matching", "r1", "r2", "r3", "asr"):
            feed(metric, row.get("baseline_id", ""), row.get(metric))
    for row in judge_rows.values():
        feed("llm_overall", row.get("baseline_id", ""), row.get("overall_score"))
        for name, value in (row.get("scores") or {}).items():
            feed(f"llm_{name}", row.get("baseline_id", ""), value)

    out = []
    for metric in sorted(per_metric):
        means = {b: float(np.mean(vs)) for b, vs in per_metric[metric].items()}
        lo, hi = integer_bounded_range(list(means.values()))
        lower_better = metric in LOWER_BETTER
        for baseline_id in sorted(means):
            out.append([metric, baseline_id, means[baseline_id],
                        minmax_norm(means[baseline_id], lo, hi, reversed_=lower_better)])
    return out


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

COMMANDS = {
    "eval-physical": cmd_eval_physical,
    "eval-semantic": cmd_eval_semantic,
    "eval-finegrained": cmd_eval_finegrained,
    "judge": cmd_judge,
    "score-select": cmd_score_select,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="motioneval",
                                     description="Text-to-motion evaluation engine")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="run configuration JSON")
        cmd.add_argument("--jobs", type=int, default=None, help="worker pool size")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--strict", action="store_true",
                         help="literal ground tolerance; reject fenced judge JSON")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = cfg.resolve(args.out)
        if args.strict:
            cfg.strict = True
        return COMMANDS[args.command](cfg)
    except (ConfigError, ManifestError, MissingFile) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TransportError, RateLimited) as exc:
        print(f"network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except (UnresolvedPrompt, MotionEvalError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
