"""CSV and manifest serialization.

Formats:

* matrices — headerless CSV, one matrix row per line, shortest
  round-trip decimal representation (bit-exact float64 round trips);
* observations — CSV with header ``i,row,col,y``; ``i`` and the cell
  indices are 1-based on disk, converted to 0-based arrays in memory;
* result tables — CSV with named header columns;
* manifests — sorted-key JSON recording config, seed, config hash and
  library versions (no timestamps, so reruns are reproducible).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .sampling import ObservationSet

__all__ = [
    "fmt_value",
    "save_matrix_csv",
    "load_matrix_csv",
    "save_observations_csv",
    "load_observations_csv",
    "write_rows_csv",
    "config_hash",
    "write_manifest",
]


def fmt_value(v) -> str:
    """Deterministic text form: shortest round-trip repr for floats."""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def save_matrix_csv(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    lines = [",".join(repr(float(v)) for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)


def save_observations_csv(path, obs: ObservationSet) -> None:
    lines = ["i,row,col,y"]
    for i in range(obs.n):
        lines.append(f"{i + 1},{obs.rows[i] + 1},{obs.cols[i] + 1},{repr(float(obs.ys[i]))}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_observations_csv(path, m1: int, m2: int) -> ObservationSet:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=float)
    if raw.shape[1] != 4:
        raise ValueError("observations CSV must have columns i,row,col,y")
    return ObservationSet(
        m1=m1,
        m2=m2,
        rows=raw[:, 1].astype(np.int64) - 1,
        cols=raw[:, 2].astype(np.int64) - 1,
        ys=raw[:, 3],
    )


def write_rows_csv(path, header: list[str], rows: list[dict]) -> None:
    """Write dict rows under a fixed header; missing keys become empty cells."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_value(row.get(col, "")) for col in header))
    Path(path).write_text("\n".join(lines) + "\n")


def config_hash(config: dict) -> str:
    """Short stable hash of the canonical JSON form of a config dict."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def write_manifest(out_dir, command: str, config: dict, seed: int) -> Path:
    import platform

    import scipy

    from . import __version__

    manifest = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "versions": {
            "expmc": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
