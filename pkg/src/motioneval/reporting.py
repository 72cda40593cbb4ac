"""Deterministic report writers.

JSON reports embed the full effective configuration so any row can be
reproduced from the report alone; repeated runs on identical inputs produce
byte-identical files. CSV rows carry 6 significant digits ('.' decimal, no
separators); the fine-grained table keeps the 4-decimal layout its published
counterparts use.
"""

import json
from pathlib import Path


def format_value(value, decimals=None):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if decimals is not None:
            return f"{value:.{decimals}f}"
        return f"{value:.6g}"
    return str(value)


def write_json_report(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n")


def write_csv(path, header, rows, config=None, decimals=None):
    """Write rows of plain values; config (if given) lands in a '#' first line."""
    lines = []
    if config is not None:
        lines.append("# " + json.dumps(config, sort_keys=True, ensure_ascii=False))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(format_value(v, decimals=decimals) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_json_report(path):
    return json.loads(Path(path).read_text())
