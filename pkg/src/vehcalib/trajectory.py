"""Planar trajectory splines and the motion gates built on them.

Vehicle heading is taken as the tangent of a per-axis B-spline fitted to the
sensor's world positions.  Speed and curvature computed from the same spline
decide which timestamps are trustworthy for heading-offset estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, make_interp_spline, make_splrep
from scipy.spatial.transform import Rotation

from .exceptions import EmptyInputError, InvalidInputError, NoValidDataError, StandstillError
from .geom import circular_mean, circular_std, matrix_to_euler, wrap_angle

STANDSTILL_SPEED_SQ = 1e-8


@dataclass(frozen=True)
class PoseSample:
    t: float
    x: float
    y: float
    z: float
    yaw_sensor: float


@dataclass(frozen=True)
class Poses:
    """Timestamped sensor-to-world poses stored column-wise.

    ``quat`` rows are unit quaternions ``(w, x, y, z)`` (Hamilton, scalar
    first) rotating sensor-frame vectors into the world frame.
    """

    t: np.ndarray
    xyz: np.ndarray
    quat: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        xyz = np.asarray(self.xyz, dtype=float).reshape(-1, 3)
        quat = np.asarray(self.quat, dtype=float).reshape(-1, 4)
        if not (len(t) == len(xyz) == len(quat)):
            raise InvalidInputError("pose columns differ in length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(xyz)) and np.all(np.isfinite(quat))):
            raise InvalidInputError("poses contain non-finite values")
        norms = np.linalg.norm(quat, axis=1)
        if np.any(norms < 1e-9):
            raise InvalidInputError("zero quaternion in poses")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "quat", quat / norms[:, None])

    @classmethod
    def from_rotations(cls, t, xyz, rotations) -> "Poses":
        q = Rotation.from_matrix(np.asarray(rotations, dtype=float)).as_quat()
        return cls(t, xyz, q[:, [3, 0, 1, 2]])

    @classmethod
    def from_yaw(cls, t, xyz, yaw) -> "Poses":
        """Level poses whose only rotation is a heading about world z."""
        half = 0.5 * np.asarray(yaw, dtype=float)
        zeros = np.zeros_like(half)
        return cls(t, xyz, np.column_stack([np.cos(half), zeros, zeros, np.sin(half)]))

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, idx) -> "Poses":
        return Poses(self.t[idx], self.xyz[idx], self.quat[idx])

    @property
    def xy(self) -> np.ndarray:
        return self.xyz[:, :2]

    def rotations(self) -> np.ndarray:
        return Rotation.from_quat(self.quat[:, [1, 2, 3, 0]]).as_matrix()

    @property
    def yaw(self) -> np.ndarray:
        """Z-Y-X yaw of every sensor orientation."""
        return np.array([matrix_to_euler(R)[0] for R in self.rotations()])

    def samples(self) -> list[PoseSample]:
        yaw = self.yaw
        return [PoseSample(float(t), *map(float, p), float(y)) for t, p, y in zip(self.t, self.xyz, yaw)]

    def shifted(self, dt: float) -> "Poses":
        return Poses(self.t + dt, self.xyz, self.quat)


def _check_times(t: np.ndarray, min_count: int) -> None:
    if t.size < min_count:
        raise EmptyInputError(f"need at least {min_count} samples, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise InvalidInputError("timestamps must be strictly increasing (duplicates found)")


@dataclass(frozen=True)
class TrajectorySpline:
    """Per-axis B-spline x(t), y(t); immutable once fitted."""

    bx: BSpline
    by: BSpline
    t_first: float
    t_last: float

    @property
    def degree(self) -> int:
        return int(self.bx.k)

    def _check(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        span = self.t_last - self.t_first
        tol = 1e-9 * max(1.0, abs(self.t_last), span)
        if np.any(t < self.t_first - tol) or np.any(t > self.t_last + tol):
            raise InvalidInputError(f"t outside spline domain [{self.t_first}, {self.t_last}]")
        return t

    def position(self, t) -> np.ndarray:
        t = self._check(t)
        return np.stack([self.bx(t), self.by(t)], axis=-1)

    def derivative(self, t, order: int = 1) -> tuple[np.ndarray, np.ndarray]:
        t = self._check(t)
        return self.bx(t, nu=order), self.by(t, nu=order)

    def speed_sq(self, t):
        """(x')^2 + (y')^2 -- squared speed, no square root."""
        dx, dy = self.derivative(t, 1)
        return dx * dx + dy * dy

    def curvature_components(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis curvature ``|x''| / (1 + x'^2)^1.5`` and the same for y."""
        dx, dy = self.derivative(t, 1)
        ddx, ddy = self.derivative(t, 2)
        cx = np.abs(ddx) / (1.0 + dx * dx) ** 1.5
        cy = np.abs(ddy) / (1.0 + dy * dy) ** 1.5
        return cx, cy

    def heading(self, t):
        """Direction of travel atan2(y', x'); raises at standstill."""
        dx, dy = self.derivative(t, 1)
        if np.any(dx * dx + dy * dy < STANDSTILL_SPEED_SQ):
            raise StandstillError("heading undefined while the vehicle is stationary")
        h = np.arctan2(dy, dx)
        return wrap_angle(h)


def fit_spline(t, xy, degree: int = 3, smoothing: float | None = None) -> TrajectorySpline:
    """Fit x(t), y(t) B-splines.

    With ``smoothing=None`` the spline interpolates every sample (not-a-knot
    end conditions, so polynomials up to ``degree`` are reproduced exactly).
    A positive ``smoothing`` switches to the approximating FITPACK-style
    spline whose squared residual sum is bounded by that value.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(xy) != len(t):
        raise InvalidInputError("t and xy differ in length")
    if degree < 1:
        raise InvalidInputError("degree must be a positive integer")
    _check_times(t, degree + 1)
    if smoothing is None or smoothing == 0:
        bx = make_interp_spline(t, xy[:, 0], k=degree)
        by = make_interp_spline(t, xy[:, 1], k=degree)
    else:
        if smoothing < 0:
            raise InvalidInputError("smoothing must be non-negative")
        bx = make_splrep(t, xy[:, 0], k=degree, s=smoothing)
        by = make_splrep(t, xy[:, 1], k=degree, s=smoothing)
    return TrajectorySpline(bx, by, float(t[0]), float(t[-1]))


def smoothing_budget(n: int, pos_sigma: float) -> float | None:
    """Residual budget for :func:`fit_spline` given a position noise sigma."""
    if pos_sigma < 0:
        raise InvalidInputError("pos_sigma must be non-negative")
    return None if pos_sigma == 0 else n * pos_sigma**2


def heading_at(spline: TrajectorySpline, t):
    return spline.heading(t)


def speed_sq_at(spline: TrajectorySpline, t):
    return spline.speed_sq(t)


def curvature_components_at(spline: TrajectorySpline, t):
    return spline.curvature_components(t)


@dataclass(frozen=True)
class MotionGates:
    """Thresholds deciding where the trajectory tangent is a usable heading.

    ``v_min_sq`` is in (m/s)^2 because the speed measure it is compared with
    is squared.
    """

    v_min_sq: float = 9.0
    c_max: float = 0.01

    def __post_init__(self):
        if self.v_min_sq <= 0 or self.c_max <= 0:
            raise InvalidInputError("gate thresholds must be positive")


def valid_mask(spline: TrajectorySpline, timestamps, gates: MotionGates = MotionGates()) -> np.ndarray:
    ts = np.asarray(timestamps, dtype=float).reshape(-1)
    if ts.size == 0:
        return np.zeros(0, dtype=bool)
    v = spline.speed_sq(ts)
    cx, cy = spline.curvature_components(ts)
    return (v >= gates.v_min_sq) & (np.maximum(cx, cy) <= gates.c_max)


def valid_set(spline: TrajectorySpline, timestamps, gates: MotionGates = MotionGates()) -> np.ndarray:
    """Timestamps passing both the speed and the curvature gate (may be empty)."""
    ts = np.asarray(timestamps, dtype=float).reshape(-1)
    return ts[valid_mask(spline, ts, gates)]


@dataclass
class HeadingOffset:
    offset: float
    used_count: int
    dispersion: float
    mask: np.ndarray = field(repr=False)
    differences: np.ndarray = field(repr=False)


def heading_offset(
    t,
    xy,
    sensor_yaw,
    gates: MotionGates = MotionGates(),
    degree: int = 3,
    smoothing: float | None = None,
) -> HeadingOffset:
    """Mean wrapped difference between sensor yaw and trajectory heading.

    Only timestamps in the valid set contribute.  This is the shared core of
    the LiDAR and GNSS/INS yaw calibrations.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    sensor_yaw = np.asarray(sensor_yaw, dtype=float).reshape(-1)
    if sensor_yaw.shape != t.shape:
        raise InvalidInputError("sensor_yaw and t differ in length")
    spline = fit_spline(t, xy, degree=degree, smoothing=smoothing)
    mask = valid_mask(spline, t, gates)
    if not np.any(mask):
        raise NoValidDataError("no timestamps pass the speed/curvature gates")
    diffs = wrap_angle(sensor_yaw[mask] - spline.heading(t[mask]))
    diffs = np.atleast_1d(diffs)
    offset = circular_mean(diffs)
    dispersion = circular_std(diffs) if diffs.size >= 2 else 0.0
    return HeadingOffset(offset, int(diffs.size), dispersion, mask, diffs)


@dataclass(frozen=True)
class StraightSegment:
    t_start: float
    t_end: float
    mean_heading: float
    length: float
    i_start: int
    i_end: int

    def contains(self, t0: float, t1: float) -> bool:
        return self.t_start <= t0 and t1 <= self.t_end


def _simplify(xy: np.ndarray, tolerance: float) -> list[int]:
    """Ramer-Douglas-Peucker vertex indices (always includes both ends)."""
    n = len(xy)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        a, b = xy[i], xy[j]
        pts = xy[i + 1 : j]
        ab = b - a
        L = math.hypot(*ab)
        if L < 1e-12:
            dist = np.linalg.norm(pts - a, axis=1)
        else:
            dist = np.abs(ab[0] * (pts[:, 1] - a[1]) - ab[1] * (pts[:, 0] - a[0])) / L
        k = int(np.argmax(dist))
        if dist[k] > tolerance:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return list(np.flatnonzero(keep))


def extract_straight_segments(
    t,
    xy,
    min_length: float = 50.0,
    max_heading_dev: float = math.radians(5.0),
    tolerance: float = 0.5,
) -> list[StraightSegment]:
    """Split a planar path into polyline edges and keep the long, straight ones.

    Adjacent edges share a vertex; the later edge starts one sample after it
    so the returned segments are disjoint in time.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(t) < 2:
        raise EmptyInputError("need at least two samples")
    if len(xy) != len(t):
        raise InvalidInputError("t and xy differ in length")
    verts = _simplify(xy, tolerance)
    steps = np.diff(xy, axis=0)
    step_len = np.hypot(steps[:, 0], steps[:, 1])
    step_heading = np.arctan2(steps[:, 1], steps[:, 0])
    out = []
    for a, b in zip(verts[:-1], verts[1:]):
        start = a if a == 0 else a + 1
        if b - start < 1:
            continue
        chord = xy[b] - xy[start]
        length = math.hypot(*chord)
        if length < min_length:
            continue
        direction = math.atan2(chord[1], chord[0])
        moving = step_len[start:b] > 1e-9
        if not np.any(moving):
            continue
        h = step_heading[start:b][moving]
        if np.max(np.abs(wrap_angle(h - direction))) > max_heading_dev:
            continue
        out.append(
            StraightSegment(
                float(t[start]), float(t[b]), circular_mean(h), length, int(start), int(b)
            )
        )
    return out
