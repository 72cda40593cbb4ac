"""Run configuration: one JSON file drives every subcommand.

    {
      "manifest": "corpus/manifest.json",
      "out_dir": "reports",
      "seed": 0,
      "jobs": 1,
      "stats": {"mean": "stats/mean.npy", "std": "stats/std.npy"},
      "targets": {"root_move": "root_move.json", "body_part": "body_part.json"},
      "contact": {"h_contact": 0.05, "v_contact": 0.01, "h_float": 0.12,
                  "r_min": 0.1, "l_min": 5, "left_foot": 10, "right_foot": 11},
      "bootstrap_replicates": 1000,
      "mm_pairs": 100, "diversity_pairs": 300,
      "pool_size": 32, "asr_threshold": 0.6,
      "flatten_length": 1024,
      "window": 30,
      "judge": {"endpoint": "http://host/v1/chat/completions", "model": "judge-model",
                "timeout": 60, "concurrency": 4,
                "retry": {"max_attempts": 5, "base_delay": 1.0, "factor": 2.0}},
      "strict": false,
      "reports": {"physical": "...", "semantic": "...", "judge": "..."}
    }

Command-line flags (--jobs, --seed, --out, --strict) override file values.
Relative paths resolve against the config file's directory.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .contact import ContactConfig
from .errors import ConfigError
from .judge import RetryPolicy


@dataclass
class JudgeConfig:
    endpoint: str = ""
    model: str = ""
    timeout: float = 60.0
    concurrency: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)


@dataclass
class RunConfig:
    config_dir: Path = Path(".")
    manifest: Path | None = None
    out_dir: Path = Path("reports")
    seed: int = 0
    jobs: int = 1
    stats_mean: Path | None = None
    stats_std: Path | None = None
    root_move: Path | None = None
    body_part: Path | None = None
    contact: ContactConfig = field(default_factory=ContactConfig)
    bootstrap_replicates: int = 1000
    mm_pairs: int = 100
    diversity_pairs: int = 300
    pool_size: int = 32
    asr_threshold: float = 0.6
    flatten_length: int = 1024
    window: int = 30
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    strict: bool = False
    report_paths: dict = field(default_factory=dict)

    def resolve(self, value):
        path = Path(value)
        return path if path.is_absolute() else self.config_dir / path

    def effective(self):
        """The configuration echoed into every report.

        Excludes parallelism knobs (jobs, concurrency limits do not change
        results) so reruns with different pool sizes stay byte-identical.
        """
        return {
            "manifest": str(self.manifest) if self.manifest else None,
            "seed": self.seed,
            "contact": {
                "h_contact": self.contact.h_contact,
                "v_contact": self.contact.v_contact,
                "h_float": self.contact.h_float,
                "r_min": self.contact.r_min,
                "l_min": self.contact.l_min,
                "left_foot": self.contact.left_foot,
                "right_foot": self.contact.right_foot,
            },
            "bootstrap_replicates": self.bootstrap_replicates,
            "mm_pairs": self.mm_pairs,
            "diversity_pairs": self.diversity_pairs,
            "pool_size": self.pool_size,
            "asr_threshold": self.asr_threshold,
            "flatten_length": self.flatten_length,
            "window": self.window,
            "judge_model": self.judge.model,
            "strict": self.strict,
            "version": package_version(),
        }


def package_version():
    try:
        from importlib.metadata import version

        return version("motioneval")
    except Exception:
        return "unknown"


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    cfg = RunConfig(config_dir=path.parent)

    if "manifest" in raw:
        cfg.manifest = cfg.resolve(raw["manifest"])
    if "out_dir" in raw:
        cfg.out_dir = cfg.resolve(raw["out_dir"])
    cfg.seed = int(raw.get("seed", cfg.seed))
    cfg.jobs = int(raw.get("jobs", cfg.jobs))

    stats = raw.get("stats") or {}
    if stats:
        if "mean" not in stats or "std" not in stats:
            raise ConfigError("stats needs both mean and std paths")
        cfg.stats_mean = cfg.resolve(stats["mean"])
        cfg.stats_std = cfg.resolve(stats["std"])

    targets = raw.get("targets") or {}
    if "root_move" in targets:
        cfg.root_move = cfg.resolve(targets["root_move"])
    if "body_part" in targets:
        cfg.body_part = cfg.resolve(targets["body_part"])

    contact = raw.get("contact") or {}
    try:
        cfg.contact = ContactConfig(
            h_contact=float(contact.get("h_contact", 0.05)),
            v_contact=float(contact.get("v_contact", 0.01)),
            h_float=float(contact.get("h_float", 0.12)),
            r_min=float(contact.get("r_min", 0.1)),
            l_min=int(contact.get("l_min", 5)),
            left_foot=int(contact.get("left_foot", 10)),
            right_foot=int(contact.get("right_foot", 11)),
        )
    except Exception as exc:
        raise ConfigError(f"bad contact config: {exc}") from exc

    cfg.bootstrap_replicates = int(raw.get("bootstrap_replicates", cfg.bootstrap_replicates))
    cfg.mm_pairs = int(raw.get("mm_pairs", cfg.mm_pairs))
    cfg.diversity_pairs = int(raw.get("diversity_pairs", cfg.diversity_pairs))
    cfg.pool_size = int(raw.get("pool_size", cfg.pool_size))
    cfg.asr_threshold = float(raw.get("asr_threshold", cfg.asr_threshold))
    cfg.flatten_length = int(raw.get("flatten_length", cfg.flatten_length))
    cfg.window = int(raw.get("window", cfg.window))
    cfg.strict = bool(raw.get("strict", cfg.strict))

    judge = raw.get("judge") or {}
    retry_raw = judge.get("retry") or {}
    cfg.judge = JudgeConfig(
        endpoint=judge.get("endpoint", ""),
        model=judge.get("model", ""),
        timeout=float(judge.get("timeout", 60.0)),
        concurrency=int(judge.get("concurrency", 4)),
        retry=RetryPolicy(
            max_attempts=int(retry_raw.get("max_attempts", 5)),
            base_delay=float(retry_raw.get("base_delay", 1.0)),
            factor=float(retry_raw.get("factor", 2.0)),
        ),
    )

    reports = raw.get("reports") or {}
    cfg.report_paths = {name: cfg.resolve(p) for name, p in reports.items()}
    return cfg
