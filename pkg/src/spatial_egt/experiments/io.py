"""Snapshot, CSV and manifest files."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..grid import DensityField, Grid


def write_snapshot(path, field: DensityField) -> Path:
    """One snapshot: ``#`` header lines (time, grid, strategies) then row-major values.

    Each strategy's field is written as ``shape[0]`` lines of ``shape[1]`` values
    (one line in 1-D).
    """
    path = Path(path)
    g = field.grid
    lines = [f"# time {field.time!r}",
             f"# shape {' '.join(map(str, g.shape))}",
             f"# lower {' '.join(repr(v) for v in g.lower)}",
             f"# upper {' '.join(repr(v) for v in g.upper)}",
             f"# bc {g.bc}",
             f"# strategies {field.num_strategies}"]
    if g.active is not None:
        lines.append(f"# active {' '.join(repr(v) for pair in g.active for v in pair)}")
    for v in field.values:
        rows = v.reshape(v.shape[0], -1) if v.ndim == 2 else v[None]
        lines.extend(" ".join(f"{x:.17g}" for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot(path) -> DensityField:
    head, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(" ")
            head[key] = val.split()
        elif line.strip():
            rows.append([float(x) for x in line.split()])
    shape = tuple(int(v) for v in head["shape"])
    S = int(head["strategies"][0])
    active = None
    if "active" in head:
        active = np.asarray([float(v) for v in head["active"]]).reshape(-1, 2)
    grid = Grid(shape, tuple(float(v) for v in head["lower"]), tuple(float(v) for v in head["upper"]),
                head["bc"][0], active)
    values = np.asarray(rows, dtype=float).reshape((S,) + shape)
    return DensityField(grid, values, float(head["time"][0]))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return path


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path
