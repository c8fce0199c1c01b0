"""Readers and writers for the on-disk formats.

All tables are comma-separated with a single header row.  Floats are
written with 17 significant digits so a write/read cycle is lossless.
A missing file raises ``FileNotFoundError``; a malformed one raises
:class:`~vehcalib.exceptions.InvalidInputError`.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .camera import Intrinsics, VPObservations
from .exceptions import InvalidInputError
from .lidar import PointCloudFrame
from .radar import COLUMNS as RADAR_COLUMNS
from .radar import RadarPoints
from .trajectory import Poses

POSE_COLUMNS = ("t", "x", "y", "z", "qw", "qx", "qy", "qz")
VP_COLUMNS = ("t", "vp_u", "vp_v", "hl_theta")
LINE_COLUMNS = ("t", "u1", "v1", "u2", "v2")
POINT_COLUMNS = ("x", "y", "z")
INDEX_COLUMNS = ("frame_index", "t")
TRACE_COLUMNS = ("iteration", "psi")
INTRINSIC_KEYS = ("fx", "fy", "cx", "cy", "skew")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_table(path, columns, rows, int_columns=()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ints = {columns.index(c) for c in int_columns}
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(int(v)) if j in ints else _fmt(v) for j, v in enumerate(row)) + "\n")


def read_table(path, columns) -> np.ndarray:
    """Numeric table with the expected header; empty cells read as NaN."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    with open(path) as fh:
        header = fh.readline().strip()
        names = tuple(h.strip() for h in header.split(","))
        if names != tuple(columns):
            raise InvalidInputError(f"{path.name}: expected header {','.join(columns)}, got {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(columns):
                raise InvalidInputError(f"{path.name}:{lineno}: expected {len(columns)} fields, got {len(cells)}")
            try:
                rows.append([float(c) if c.strip() else math.nan for c in cells])
            except ValueError as exc:
                raise InvalidInputError(f"{path.name}:{lineno}: {exc}") from exc
    return np.array(rows, dtype=float).reshape(-1, len(columns))


# poses


def write_poses(path, poses: Poses) -> None:
    write_table(path, POSE_COLUMNS, np.column_stack([poses.t, poses.xyz, poses.quat]))


def read_poses(path) -> Poses:
    a = read_table(path, POSE_COLUMNS)
    return Poses(a[:, 0], a[:, 1:4], a[:, 4:8])


# camera


def write_vp(path, obs: VPObservations) -> None:
    write_table(path, VP_COLUMNS, np.column_stack([obs.t, obs.vp, obs.hl_theta]))


def read_vp(path) -> VPObservations:
    a = read_table(path, VP_COLUMNS)
    return VPObservations(a[:, 0], a[:, 1:3], a[:, 3])


def write_lines(path, t, lines) -> None:
    write_table(path, LINE_COLUMNS, np.column_stack([np.asarray(t, float), np.asarray(lines, float).reshape(-1, 4)]))


def read_lines(path) -> tuple[np.ndarray, np.ndarray]:
    a = read_table(path, LINE_COLUMNS)
    return a[:, 0], a[:, 1:5]


def write_intrinsics(path, intr: Intrinsics) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for k in INTRINSIC_KEYS:
            fh.write(f"{k}={_fmt(getattr(intr, k))}\n")


def read_intrinsics(path) -> Intrinsics:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    vals = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path.name}:{lineno}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in INTRINSIC_KEYS:
            raise InvalidInputError(f"{path.name}:{lineno}: unknown key {k!r}")
        try:
            vals[k] = float(v)
        except ValueError as exc:
            raise InvalidInputError(f"{path.name}:{lineno}: {exc}") from exc
    missing = {"fx", "fy", "cx", "cy"} - set(vals)
    if missing:
        raise InvalidInputError(f"{path.name}: missing {sorted(missing)}")
    return Intrinsics(**vals)


# lidar


def write_lidar_dir(directory, frames) -> None:
    """``<index>.csv`` per frame plus ``index.csv`` mapping index to time."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, fr in enumerate(frames):
        write_table(directory / f"{k}.csv", POINT_COLUMNS, fr.points)
    write_table(directory / "index.csv", INDEX_COLUMNS, [(k, fr.t) for k, fr in enumerate(frames)], int_columns=("frame_index",))


def read_lidar_dir(directory) -> list[PointCloudFrame]:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(str(directory))
    index = read_table(directory / "index.csv", INDEX_COLUMNS)
    frames = []
    for idx, t in index:
        if idx != int(idx):
            raise InvalidInputError(f"frame index {idx} is not an integer")
        frames.append(PointCloudFrame(float(t), read_table(directory / f"{int(idx)}.csv", POINT_COLUMNS)))
    return frames


# radar


def write_radar(path, points: RadarPoints) -> None:
    write_table(path, RADAR_COLUMNS, points.rows(), int_columns=("track_id",))


def read_radar(path) -> RadarPoints:
    a = read_table(path, RADAR_COLUMNS)
    if np.any(a[:, 1] != np.round(a[:, 1])):
        raise InvalidInputError("track_id must be an integer")
    return RadarPoints.from_rows(a)


def write_trace(path, trace) -> None:
    trace = np.asarray(trace, dtype=float)
    write_table(path, TRACE_COLUMNS, [(k + 1, p) for k, p in enumerate(trace)], int_columns=("iteration",))


# json


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, data) -> None:
    """Deterministic JSON: sorted keys, non-finite floats as null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(_jsonable(data), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
