"""Camera-to-vehicle rotation from vanishing points and horizon lines.

Pixel frame: u right, v down.  Camera axes: x right, y down, z forward.
With the camera mounted without error the camera axes relate to the vehicle
axes (x forward, y left, z up) by the fixed permutation ``CAM_FROM_VEHICLE``:
camera x = -vehicle y, camera y = -vehicle z, camera z = vehicle x.

A per-frame observation is a vanishing point of the road direction plus the
horizon angle ``hl_theta``.  ``hl_theta`` is measured counter-clockwise as
seen on screen (a horizon rising to the right is positive), which makes it
equal to the vehicle-frame roll of the camera when yaw and pitch are zero.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateError, EmptyInputError, InvalidInputError, NoValidDataError
from .geom import EulerYPR, circular_mean, circular_std, rot_x, rot_y, rot_z, wrap_angle

CAM_FROM_VEHICLE = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInputError("focal lengths must be positive")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def K_inv(self) -> np.ndarray:
        return np.linalg.inv(self.K)


@dataclass(frozen=True)
class VPObservations:
    """Per-frame vanishing point (pixels) and horizon angle (radians).

    ``hl_theta`` may be NaN when no horizon is available (line-only input);
    roll is then left undetermined.
    """

    t: np.ndarray
    vp: np.ndarray
    hl_theta: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        vp = np.asarray(self.vp, dtype=float).reshape(-1, 2)
        hl = np.asarray(self.hl_theta, dtype=float).reshape(-1)
        if not (len(t) == len(vp) == len(hl)):
            raise InvalidInputError("VP observation columns differ in length")
        if not np.all(np.isfinite(vp)):
            raise InvalidInputError("non-finite vanishing point")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "vp", vp)
        object.__setattr__(self, "hl_theta", hl)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, idx) -> "VPObservations":
        return VPObservations(self.t[idx], self.vp[idx], self.hl_theta[idx])


@dataclass(frozen=True)
class LineSeg2D:
    u1: float
    v1: float
    u2: float
    v2: float

    def __post_init__(self):
        if math.hypot(self.u2 - self.u1, self.v2 - self.v1) < 1.0:
            raise InvalidInputError("line segment shorter than 1 px")

    @property
    def homogeneous(self) -> np.ndarray:
        return np.cross([self.u1, self.v1, 1.0], [self.u2, self.v2, 1.0])


@dataclass(frozen=True)
class CameraEstimate:
    roll: float
    pitch: float
    yaw: float
    window_std: float
    frame_count: int
    t: float = math.nan


def _homog_line(line) -> np.ndarray:
    if isinstance(line, LineSeg2D):
        return line.homogeneous
    a = np.asarray(line, dtype=float).reshape(-1)
    if a.size == 4:
        return np.cross([a[0], a[1], 1.0], [a[2], a[3], 1.0])
    if a.size == 3:
        return a
    raise InvalidInputError("line must be a LineSeg2D, 4 endpoint coords or 3 coefficients")


def _homog_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.size == 2:
        return np.array([a[0], a[1], 1.0])
    if a.size == 3:
        return a
    raise InvalidInputError("point must have 2 or 3 coordinates")


def line_vp_distance(line, vp) -> float:
    """Normalised incidence ``|l . p| / (|l| |p|)`` of a line and a point."""
    l = _homog_line(line)
    p = _homog_point(vp)
    nl, np_ = np.linalg.norm(l), np.linalg.norm(p)
    if nl == 0 or np_ == 0:
        raise DegenerateError("zero-norm line or point")
    return float(abs(l @ p) / (nl * np_))


def classify_line(line, vp, d_th: float) -> bool:
    """True if the line passes through ``vp`` (distance strictly below ``d_th``)."""
    if d_th <= 0:
        raise InvalidInputError("d_th must be positive")
    return line_vp_distance(line, vp) < d_th


def _line_array(lines) -> np.ndarray:
    return np.array([_homog_line(l) for l in lines], dtype=float).reshape(-1, 3)


def _distances(L: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.abs(L @ p) / (np.linalg.norm(L, axis=1) * np.linalg.norm(p))


def _lsq_intersection(L: np.ndarray) -> np.ndarray | None:
    ab = np.linalg.norm(L[:, :2], axis=1)
    ok = ab > 0
    if ok.sum() < 2:
        return None
    Ln = L[ok] / ab[ok, None]
    A = Ln[:, :2]
    b = -Ln[:, 2]
    N = A.T @ A
    if np.linalg.cond(N) > 1e12:
        return None
    return np.linalg.solve(N, A.T @ b)


def estimate_vp_from_lines(lines, d_th: float = 1e-3, iterations: int = 200, rng_seed: int = 0):
    """RANSAC vanishing point from line segments.

    Pairs of lines propose ``l1 x l2``; the hypothesis with the most lines
    under the incidence threshold wins and is refined by least-squares
    intersection of its inliers.  When all pairs fit in the iteration budget
    they are enumerated, so the result is then independent of the seed.

    Returns ``(vp_uv, inlier_count)``.
    """
    L = _line_array(lines)
    n = len(L)
    if n < 2:
        raise EmptyInputError("need at least two lines")
    total_pairs = n * (n - 1) // 2
    if total_pairs <= iterations:
        pairs = list(combinations(range(n), 2))
    else:
        rng = np.random.default_rng(rng_seed)
        pairs = [tuple(rng.choice(n, size=2, replace=False)) for _ in range(iterations)]
    best = None
    for i, j in pairs:
        p = np.cross(L[i], L[j])
        norm = np.linalg.norm(p)
        if norm == 0 or abs(p[2]) <= 1e-12 * norm:
            continue
        p = p / p[2]
        d = _distances(L, p)
        inl = d < d_th
        key = (int(inl.sum()), -float(d[inl].sum()))
        if best is None or key > best[0]:
            best = (key, p, inl)
    if best is None:
        raise DegenerateError("every line pair is parallel; no finite vanishing point")
    _, p, inl = best
    refined = _lsq_intersection(L[inl])
    if refined is not None:
        q = np.array([refined[0], refined[1], 1.0])
        inl_q = _distances(L, q) < d_th
        if inl_q.sum() >= inl.sum():
            p, inl = q, inl_q
    return p[:2].copy(), int(inl.sum())


def vp_to_yaw_pitch(vp, intrinsics: Intrinsics) -> tuple[float, float]:
    """Camera-frame angles of the back-projected vanishing direction.

    ``r = K^-1 p / |K^-1 p|``; ``yaw = asin(r2)``, ``pitch = -atan(r1 / r3)``.
    Both are in the camera axis convention; see :func:`mount_from_observation`
    for the vehicle-frame triple.
    """
    r = intrinsics.K_inv @ _homog_point(vp)
    r = r / np.linalg.norm(r)
    if r[2] <= 1e-6:
        raise DegenerateError("vanishing point lies behind the camera")
    if abs(r[1]) > 1.0 - 1e-9:
        raise DegenerateError("vanishing direction outside the arcsin domain")
    return math.asin(r[1]), -math.atan(r[0] / r[2])


def roll_from_hl(hl_theta: float) -> float:
    """Roll is the horizon angle itself, folded into (-pi/2, pi/2]."""
    r = wrap_angle(2.0 * hl_theta) / 2.0
    return r


def _normalized_hl_angle(hl_theta: float, intrinsics: Intrinsics) -> float:
    d = intrinsics.K_inv @ np.array([math.cos(hl_theta), -math.sin(hl_theta), 0.0])
    return roll_from_hl(math.atan2(-d[1], d[0]))


def mount_from_observation(vp, hl_theta: float, intrinsics: Intrinsics, roll_model: str = "projective") -> EulerYPR:
    """Vehicle-frame camera mount (Z-Y-X Euler) from one VP/HL observation.

    The road-to-camera rotation is ``Ry(a) Rx(b) Rz(c)`` in camera axes,
    with ``a = -pitch_vp`` and ``b = -yaw_vp`` from :func:`vp_to_yaw_pitch``.
    ``roll_model="literal"`` sets ``c = -hl_theta``; ``"projective"`` solves
    the exact horizon projection for ``c``, which removes the coupling
    between roll and the other two angles.  A NaN ``hl_theta`` yields NaN
    roll, with yaw and pitch solved under the assumption of zero roll.
    """
    yaw_c, pitch_c = vp_to_yaw_pitch(vp, intrinsics)
    a, b = -pitch_c, -yaw_c
    if not math.isfinite(hl_theta):
        # zero vehicle roll: road direction in camera = (sin y, -sin p cos y, cos p cos y)
        r = intrinsics.K_inv @ _homog_point(vp)
        r = r / np.linalg.norm(r)
        return EulerYPR(math.asin(r[0]), math.atan2(-r[1], r[2]), math.nan)
    if roll_model == "literal":
        c = -roll_from_hl(hl_theta)
    elif roll_model == "projective":
        theta = _normalized_hl_angle(hl_theta, intrinsics)
        c = math.atan((math.sin(b) * math.sin(a) - math.tan(theta) * math.cos(b)) / math.cos(a))
    else:
        raise InvalidInputError(f"unknown roll_model {roll_model!r}")
    R_rc = rot_y(a) @ rot_x(b) @ rot_z(c)
    M = CAM_FROM_VEHICLE.T @ R_rc.T @ CAM_FROM_VEHICLE
    return EulerYPR.from_matrix(M)


def observation_angles(obs: VPObservations, intrinsics: Intrinsics, roll_model: str = "projective") -> np.ndarray:
    """Per-frame ``(roll, pitch, yaw)`` rows."""
    out = np.empty((len(obs), 3))
    for k in range(len(obs)):
        e = mount_from_observation(obs.vp[k], obs.hl_theta[k], intrinsics, roll_model)
        out[k] = (e.roll, e.pitch, e.yaw)
    return out


class StabilityGate:
    """Sliding-window dispersion gate over per-frame (roll, pitch, yaw).

    Holds mutable state; drive one instance from one thread.
    """

    def __init__(self, window_n: int = 100, std_threshold: float = 0.005):
        if window_n < 2:
            raise InvalidInputError("window_n must be at least 2")
        self.window_n = window_n
        self.std_threshold = std_threshold
        self._window: deque = deque(maxlen=window_n)

    def reset(self) -> None:
        self._window.clear()

    def update(self, roll: float, pitch: float, yaw: float, t: float = math.nan) -> CameraEstimate | None:
        self._window.append((roll, pitch, yaw))
        if len(self._window) < self.window_n:
            return None
        w = np.array(self._window)
        means, stds = [], []
        for k in range(3):
            col = w[:, k]
            if np.all(np.isnan(col)):
                means.append(math.nan)
                continue
            if np.any(np.isnan(col)):
                return None
            s = circular_std(col)
            if s > self.std_threshold:
                return None
            stds.append(s)
            means.append(circular_mean(col))
        return CameraEstimate(means[0], means[1], means[2], max(stds), self.window_n, t)


def stability_gate(angles, window_n: int = 100, std_threshold: float = 0.005, times=None):
    """Yield ``(frame_index, CameraEstimate)`` for every frame where the gate is open."""
    gate = StabilityGate(window_n, std_threshold)
    for k, (r, p, y) in enumerate(angles):
        t = math.nan if times is None else float(times[k])
        est = gate.update(r, p, y, t)
        if est is not None:
            yield k, est


def vp_observations_from_lines(t, lines, d_th: float = 1e-3, iterations: int = 200, rng_seed: int = 0) -> VPObservations:
    """Group line rows by timestamp and estimate one VP per frame.

    Frames whose lines have no finite consensus point are dropped.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    segs = np.asarray(lines, dtype=float).reshape(-1, 4)
    if len(segs) != len(t):
        raise InvalidInputError("line timestamps and endpoints differ in length")
    times, vps = [], []
    for k, tk in enumerate(np.unique(t)):
        sel = segs[t == tk]
        if len(sel) < 2:
            continue
        try:
            vp, _ = estimate_vp_from_lines(sel, d_th, iterations, rng_seed + k)
        except DegenerateError:
            continue
        times.append(tk)
        vps.append(vp)
    if not times:
        raise NoValidDataError("no frame produced a vanishing point")
    return VPObservations(times, vps, np.full(len(times), math.nan))


class CameraCalibrator(BaseEstimator):
    """Camera-to-vehicle roll/pitch/yaw from a stream of VP/HL observations.

    Parameters
    ----------
    window_n : int
        Frames in the stability window.
    std_threshold : float
        Maximum circular std (radians) of each angle inside the window.
    roll_model : {"projective", "literal"}
        How the horizon angle is turned into roll.

    Attributes
    ----------
    estimates_ : list of CameraEstimate
        One entry per frame where the gate was open.
    roll_, pitch_, yaw_ : float
        Circular mean over ``estimates_``.
    frame_angles_ : ndarray of shape (n_frames, 3)
        Per-frame (roll, pitch, yaw).
    """

    def __init__(self, window_n=100, std_threshold=0.005, roll_model="projective"):
        self.window_n = window_n
        self.std_threshold = std_threshold
        self.roll_model = roll_model

    def fit(self, X: VPObservations, intrinsics: Intrinsics):
        if not isinstance(X, VPObservations):
            raise InvalidInputError("X must be VPObservations")
        if len(X) < self.window_n:
            raise EmptyInputError(f"need at least window_n={self.window_n} frames, got {len(X)}")
        self.frame_angles_ = observation_angles(X, intrinsics, self.roll_model)
        self.estimates_ = [
            e for _, e in stability_gate(self.frame_angles_, self.window_n, self.std_threshold, X.t)
        ]
        if not self.estimates_:
            raise NoValidDataError("stability gate never opened")
        E = np.array([(e.roll, e.pitch, e.yaw) for e in self.estimates_])
        self.roll_ = math.nan if np.all(np.isnan(E[:, 0])) else circular_mean(E[:, 0])
        self.pitch_ = circular_mean(E[:, 1])
        self.yaw_ = circular_mean(E[:, 2])
        self.n_frames_ = len(X)
        return self

    def predict(self, X: VPObservations, intrinsics: Intrinsics) -> np.ndarray:
        """Per-frame angles with the fitted mount removed (residual misalignment)."""
        check_is_fitted(self, ["roll_", "pitch_", "yaw_"])
        ang = observation_angles(X, intrinsics, self.roll_model)
        return wrap_angle(ang - np.array([self.roll_, self.pitch_, self.yaw_]))
