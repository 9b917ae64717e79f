"""Output writers. Every float is written with 17 significant digits."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

ESTIMATE_COLUMNS = ("experiment_id", "theorem_tag", "sigma", "a", "n", "p_hat", "ci_low", "ci_high",
                    "n_samples", "seed")


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj) -> str:
    """Compact JSON with '%.17g' floats; non-finite floats become null."""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(v) if math.isfinite(v) else ""
    return str(v)


def write_estimates(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in ESTIMATE_COLUMNS])


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
