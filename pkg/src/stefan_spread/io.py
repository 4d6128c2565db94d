"""File output: CSV with 17 significant digits and LF endings, JSON records, run manifest."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .core import ModelConfig, config_to_dict


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return "%.17g" % x
    return "" if x is None else str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_columns(path: str | Path, columns: dict[str, np.ndarray]) -> Path:
    """CSV from equal-length named columns."""
    names = list(columns)
    return write_csv(path, names, zip(*(columns[k] for k in names)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def config_hash(cfg: ModelConfig) -> str:
    doc = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


def write_manifest(out_dir: str | Path, cfg: ModelConfig, command: str, extra: dict | None = None) -> Path:
    """``manifest.json`` with the config hash, seed and code version, plus a config echo."""
    out_dir = Path(out_dir)
    doc = {
        "command": command,
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "config": config_to_dict(cfg),
    }
    if extra:
        doc.update(extra)
    return write_json(out_dir / "manifest.json", doc)
