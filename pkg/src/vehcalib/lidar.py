"""LiDAR-to-vehicle roll, pitch and height from the ground plane; yaw from
the sensor trajectory.

Ground extraction per frame: range filter, repeated RANSAC, random-search
refinement of the best plane, total-least-squares refit of its inliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    CalibrationError,
    DegenerateError,
    EmptyInputError,
    InvalidInputError,
    NoValidDataError,
    NotGroundPlaneError,
)
from .geom import circular_mean, circular_std, matrix_to_euler, rodrigues, rot_x, rot_y, rotation_between
from .trajectory import MotionGates, Poses, heading_offset, smoothing_budget

Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PointCloudFrame:
    t: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class PlaneModel:
    """Plane ``n . p + d = 0`` with unit normal ``n`` oriented so ``n_z > 0``."""

    normal: np.ndarray
    d: float
    inlier_count: int = 0
    rms: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            raise InvalidInputError("plane normal is zero")
        n = n / norm
        d = float(self.d) / norm
        if n[2] < 0:
            n, d = -n, -d
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "d", d)

    def distances(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal + self.d


@dataclass
class LidarEstimate:
    roll: float
    pitch: float
    yaw: float
    z: float
    stds: dict
    frames_used: int


def filter_points(frame: PointCloudFrame, r_min: float = 2.0, r_max: float = 50.0) -> PointCloudFrame:
    """Keep points whose planar range lies in ``[r_min, r_max]``."""
    if not (0 <= r_min < r_max):
        raise InvalidInputError("need 0 <= r_min < r_max")
    p = frame.points
    r = np.hypot(p[:, 0], p[:, 1])
    return PointCloudFrame(frame.t, p[(r >= r_min) & (r <= r_max)])


def _as_points(points) -> np.ndarray:
    if isinstance(points, PointCloudFrame):
        return points.points
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise InvalidInputError("points must be an (N, 3) array")
    return p


def _score(P: np.ndarray, normals: np.ndarray, ds: np.ndarray, tol: float):
    """Inlier counts and inlier rms for H candidate planes at once."""
    res = np.abs(P @ normals.T + ds)
    inl = res < tol
    counts = inl.sum(axis=0)
    sq = np.where(inl, res * res, 0.0).sum(axis=0)
    rms = np.sqrt(sq / np.maximum(counts, 1))
    return counts, rms


def ransac_plane_multi(points, runs: int = 5, iterations_per_run: int = 200, inlier_tol: float = 0.05, rng_seed=0) -> PlaneModel:
    """Best plane over ``runs`` independent RANSAC executions.

    Candidates are ranked by inlier count, ties by lower inlier rms.
    """
    P = _as_points(points)
    if len(P) < 3:
        raise EmptyInputError("RANSAC needs at least 3 points")
    rng = np.random.default_rng(rng_seed)
    scale = max(1.0, float(np.abs(P).max()))
    best = None
    for _ in range(runs):
        # Repeated indices give a zero normal and are dropped below.
        idx = rng.integers(0, len(P), size=(iterations_per_run, 3))
        a, b, c = P[idx[:, 0]], P[idx[:, 1]], P[idx[:, 2]]
        n = np.cross(b - a, c - a)
        nn = np.linalg.norm(n, axis=1)
        ok = nn > 1e-12 * scale * scale
        if not np.any(ok):
            continue
        n = n[ok] / nn[ok, None]
        d = -np.einsum("ij,ij->i", n, a[ok])
        counts, rms = _score(P, n, d, inlier_tol)
        k = np.lexsort((rms, -counts))[0]
        cand = (int(counts[k]), float(rms[k]), n[k], float(d[k]))
        if best is None or (cand[0], -cand[1]) > (best[0], -best[1]):
            best = cand
    if best is None:
        raise DegenerateError("all RANSAC samples were collinear")
    count, rms, n, d = best
    return PlaneModel(n, d, count, rms)


def _tilt(normal: np.ndarray, angles: np.ndarray, azimuths: np.ndarray) -> np.ndarray:
    """Rotate ``normal`` by ``angles`` toward directions given by ``azimuths``."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    dirs = np.outer(np.cos(azimuths), e1) + np.outer(np.sin(azimuths), e2)
    return np.outer(np.cos(angles), normal) + np.sin(angles)[:, None] * dirs


def refine_plane_random_search(
    points,
    plane: PlaneModel,
    angle_range: float = math.radians(0.5),
    d_range: float = 0.05,
    samples: int = 100,
    rounds: int = 3,
    inlier_tol: float = 0.05,
    rng_seed=0,
    return_history: bool = False,
):
    """Random search around ``plane`` for a plane with more inliers.

    Each round draws ``samples`` candidates with the normal tilted by at most
    ``angle_range`` and the intercept shifted by at most ``d_range``; the
    search re-centres on a candidate only if it strictly increases the
    inlier count, so the count never decreases.
    """
    P = _as_points(points)
    rng = np.random.default_rng(rng_seed)
    n = plane.normal.copy()
    d = plane.d
    counts, rms = _score(P, n[None, :], np.array([d]), inlier_tol)
    cur_count, cur_rms = int(counts[0]), float(rms[0])
    history = [cur_count]
    for _ in range(rounds):
        ang = angle_range * np.sqrt(rng.uniform(0.0, 1.0, samples))
        az = rng.uniform(0.0, 2.0 * np.pi, samples)
        normals = _tilt(n, ang, az)
        ds = d + rng.uniform(-d_range, d_range, samples)
        c, r = _score(P, normals, ds, inlier_tol)
        k = int(np.lexsort((r, -c))[0])
        if c[k] > cur_count:
            n, d, cur_count, cur_rms = normals[k], float(ds[k]), int(c[k]), float(r[k])
        history.append(cur_count)
    out = PlaneModel(n, d, cur_count, cur_rms)
    if return_history:
        return out, history
    return out


def svd_plane_fit(inliers) -> PlaneModel:
    """Total-least-squares plane through the centroid."""
    P = _as_points(inliers)
    if len(P) < 3:
        raise EmptyInputError("plane fit needs at least 3 points")
    centroid = P.mean(axis=0)
    Q = P - centroid
    _, s, vt = np.linalg.svd(Q, full_matrices=False)
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        raise DegenerateError("points are collinear or coincident; plane undefined")
    n = vt[2]
    d = -float(n @ centroid)
    res = Q @ n
    return PlaneModel(n, d, len(P), float(np.sqrt(np.mean(res * res))))


@dataclass(frozen=True)
class GroundConfig:
    r_min: float = 2.0
    r_max: float = 50.0
    ransac_runs: int = 5
    ransac_iterations: int = 200
    inlier_tol: float = 0.05
    refine_angle_range: float = math.radians(0.5)
    refine_d_range: float = 0.05
    refine_samples: int = 100
    refine_rounds: int = 3


def extract_ground(points, config: GroundConfig = GroundConfig(), rng_seed=0) -> PlaneModel:
    """Full ground pipeline on one frame: filter, RANSAC, refine, SVD."""
    frame = points if isinstance(points, PointCloudFrame) else PointCloudFrame(0.0, points)
    P = filter_points(frame, config.r_min, config.r_max).points
    ss = np.random.SeedSequence(rng_seed)
    s1, s2 = ss.spawn(2)
    coarse = ransac_plane_multi(P, config.ransac_runs, config.ransac_iterations, config.inlier_tol, s1)
    fine = refine_plane_random_search(
        P,
        coarse,
        config.refine_angle_range,
        config.refine_d_range,
        config.refine_samples,
        config.refine_rounds,
        config.inlier_tol,
        s2,
    )
    inl = np.abs(fine.distances(P)) < config.inlier_tol
    return svd_plane_fit(P[inl])


def plane_to_rotation_height(plane: PlaneModel) -> tuple[np.ndarray, float]:
    """Rotation taking the plane normal onto +z, and height ``d / n_z``.

    The rotation is the minimal one (axis ``n x z``); its Z-Y-X roll and
    pitch are the sensor's roll and pitch relative to the ground.
    """
    n = plane.normal
    if n[2] <= 0.5:
        raise NotGroundPlaneError(f"plane normal z-component {n[2]:.3f} <= 0.5; not a ground plane")
    axis, angle = rotation_between(n, Z_AXIS)
    R = rodrigues(axis, angle)
    return R, plane.d / n[2]


def ground_roll_pitch_height(plane: PlaneModel) -> tuple[float, float, float]:
    """Roll, pitch and the height of the sensor above the levelled ground.

    The height is read from the plane after the levelling rotation is
    applied (normal along +z), where ``d / n_z`` equals the perpendicular
    distance ``d``.
    """
    R, _ = plane_to_rotation_height(plane)
    _, pitch, roll = matrix_to_euler(R)
    level = PlaneModel(R @ plane.normal, plane.d)
    _, z = plane_to_rotation_height(level)
    return roll, pitch, z


def lidar_yaw_offset(
    poses: Poses,
    gates: MotionGates = MotionGates(),
    roll: float = 0.0,
    pitch: float = 0.0,
    degree: int = 3,
    pos_sigma: float = 0.0,
):
    """Yaw of the LiDAR relative to the direction of travel.

    Pose orientations are first stripped of the ground-derived roll and
    pitch so that the remaining yaw is measured in the levelled frame.
    Returns the :class:`~vehcalib.trajectory.HeadingOffset`.
    """
    level = (rot_y(pitch) @ rot_x(roll)).T
    R = poses.rotations() @ level
    yaw = np.array([matrix_to_euler(r)[0] for r in R])
    return heading_offset(poses.t, poses.xy, yaw, gates, degree=degree, smoothing=smoothing_budget(len(poses), pos_sigma))


def _yaw_rate(poses: Poses) -> np.ndarray:
    yaw = np.unwrap(poses.yaw)
    if len(poses) < 2:
        return np.zeros(len(poses))
    return np.gradient(yaw, poses.t)


@dataclass
class FrameResult:
    t: float
    index: int
    roll: float = math.nan
    pitch: float = math.nan
    z: float = math.nan
    plane: PlaneModel | None = None
    status: str = "ok"


class LidarCalibrator(BaseEstimator):
    """LiDAR-to-vehicle roll, pitch, yaw and mounting height.

    Parameters mirror :class:`GroundConfig` plus the frame selection and
    trajectory gates.  ``downsample`` keeps every k-th frame;
    ``max_yaw_rate`` (rad/s) drops frames taken in sharp turns.
    ``pos_sigma`` (m) smooths the pose trajectory before heading gating.

    Attributes
    ----------
    roll_, pitch_, yaw_, z_ : float
    stds_ : dict
        Circular std of roll/pitch over frames, of the per-timestamp yaw
        differences, and linear std of z.
    frames_used_ : int
    frame_results_ : list of FrameResult
    """

    def __init__(
        self,
        r_min=2.0,
        r_max=50.0,
        ransac_runs=5,
        ransac_iterations=200,
        inlier_tol=0.05,
        refine_angle_range=math.radians(0.5),
        refine_d_range=0.05,
        refine_samples=100,
        refine_rounds=3,
        downsample=10,
        max_yaw_rate=0.05,
        v_min_sq=9.0,
        c_max=0.01,
        spline_degree=3,
        pos_sigma=0.0,
        seed=0,
    ):
        self.r_min = r_min
        self.r_max = r_max
        self.ransac_runs = ransac_runs
        self.ransac_iterations = ransac_iterations
        self.inlier_tol = inlier_tol
        self.refine_angle_range = refine_angle_range
        self.refine_d_range = refine_d_range
        self.refine_samples = refine_samples
        self.refine_rounds = refine_rounds
        self.downsample = downsample
        self.max_yaw_rate = max_yaw_rate
        self.v_min_sq = v_min_sq
        self.c_max = c_max
        self.spline_degree = spline_degree
        self.pos_sigma = pos_sigma
        self.seed = seed

    def _ground_config(self) -> GroundConfig:
        return GroundConfig(
            self.r_min,
            self.r_max,
            self.ransac_runs,
            self.ransac_iterations,
            self.inlier_tol,
            self.refine_angle_range,
            self.refine_d_range,
            self.refine_samples,
            self.refine_rounds,
        )

    def fit(self, frames, poses: Poses):
        if not isinstance(poses, Poses):
            raise InvalidInputError("poses must be a Poses instance")
        if self.downsample < 1:
            raise InvalidInputError("downsample must be >= 1")
        frames = list(frames)
        if not frames:
            raise EmptyInputError("no LiDAR frames")
        cfg = self._ground_config()
        rate = _yaw_rate(poses)
        results = []
        for idx in range(0, len(frames), self.downsample):
            fr = frames[idx]
            res = FrameResult(fr.t, idx)
            if fr.t < poses.t[0] or fr.t > poses.t[-1]:
                res.status = "no_pose"
            elif abs(np.interp(fr.t, poses.t, rate)) >= self.max_yaw_rate:
                res.status = "turning"
            else:
                try:
                    plane = extract_ground(fr, cfg, rng_seed=[self.seed, idx])
                    res.roll, res.pitch, res.z = ground_roll_pitch_height(plane)
                    res.plane = plane
                except CalibrationError as exc:
                    res.status = exc.code
            results.append(res)
        self.frame_results_ = results
        good = [r for r in results if r.status == "ok"]
        if not good:
            raise NoValidDataError("no usable ground plane in any selected frame")
        rolls = np.array([r.roll for r in good])
        pitches = np.array([r.pitch for r in good])
        zs = np.array([r.z for r in good])
        self.roll_ = circular_mean(rolls)
        self.pitch_ = circular_mean(pitches)
        self.z_ = float(np.mean(zs))
        yaw = lidar_yaw_offset(poses, MotionGates(self.v_min_sq, self.c_max), self.roll_, self.pitch_, self.spline_degree, self.pos_sigma)
        self.yaw_ = yaw.offset
        self.yaw_used_ = yaw.used_count
        self.frames_used_ = len(good)
        two = len(good) >= 2
        self.stds_ = {
            "roll": circular_std(rolls) if two else 0.0,
            "pitch": circular_std(pitches) if two else 0.0,
            "yaw": yaw.dispersion,
            "z": float(np.std(zs)) if two else 0.0,
        }
        return self

    @property
    def excluded_times_(self) -> np.ndarray:
        return np.array([r.t for r in self.frame_results_ if r.status == "turning"])

    def estimate(self) -> LidarEstimate:
        check_is_fitted(self, "yaw_")
        return LidarEstimate(self.roll_, self.pitch_, self.yaw_, self.z_, dict(self.stds_), self.frames_used_)

    def transform(self, points) -> np.ndarray:
        """Level a point cloud with the fitted roll and pitch."""
        check_is_fitted(self, ["roll_", "pitch_"])
        P = _as_points(points)
        return P @ (rot_y(self.pitch_) @ rot_x(self.roll_)).T


def calibrate_lidar(frames, poses: Poses, config: dict | None = None) -> LidarEstimate:
    """Functional wrapper around :class:`LidarCalibrator`.

    ``config`` holds constructor overrides, e.g. ``{"downsample": 5}``.
    """
    return LidarCalibrator(**(config or {})).fit(frames, poses).estimate()
