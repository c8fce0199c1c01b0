"""Radar-to-vehicle yaw.

Two estimators are provided:

* the Doppler velocity method: a coarse grid search for the yaw that makes
  most detections look static, then a per-frame cosine fit iterated over
  the recording;
* the position method: static objects tracked across a straight stretch of
  road give a triangle (two ego positions and the object) whose angles pin
  down the mounting yaw, and the per-pair estimates are averaged with a
  Doppler-consistency weight.

Doppler is positive for a closing target, so a static detection satisfies
``doppler = ego_speed * cos(azimuth + yaw)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    CollinearError,
    EmptyInputError,
    IndeterminateError,
    InvalidInputError,
    NoConsensusError,
    NoStaticObjectError,
    NoStraightSegmentError,
    NoValidDataError,
    UnobservableError,
)
from .geom import circular_mean, weighted_angle_mean, wrap_angle
from .trajectory import extract_straight_segments

COLUMNS = ("t", "track_id", "range", "azimuth", "doppler", "ego_speed", "ego_x", "ego_y")


@dataclass(frozen=True)
class RadarPoints:
    """Column table of radar detections, one row per detection."""

    t: np.ndarray
    track_id: np.ndarray
    range: np.ndarray
    azimuth: np.ndarray
    doppler: np.ndarray
    ego_speed: np.ndarray
    ego_x: np.ndarray
    ego_y: np.ndarray

    def __post_init__(self):
        cols = {}
        n = None
        for name in COLUMNS:
            a = np.atleast_1d(np.asarray(getattr(self, name), dtype=np.int64 if name == "track_id" else float))
            if a.ndim != 1:
                raise InvalidInputError(f"column {name} must be one-dimensional")
            if n is None:
                n = len(a)
            elif len(a) != n:
                raise InvalidInputError("radar columns differ in length")
            cols[name] = a
        for name in COLUMNS:
            if name != "track_id" and not np.all(np.isfinite(cols[name])):
                raise InvalidInputError(f"column {name} contains non-finite values")
        if np.any(cols["range"] <= 0):
            raise InvalidInputError("range must be positive")
        if np.any(np.abs(cols["azimuth"]) > np.pi + 1e-12):
            raise InvalidInputError("azimuth outside [-pi, pi]")
        if np.any(cols["ego_speed"] < 0):
            raise InvalidInputError("ego_speed must be non-negative")
        for name, a in cols.items():
            object.__setattr__(self, name, a)

    @classmethod
    def from_rows(cls, rows) -> "RadarPoints":
        arr = np.asarray(rows, dtype=float).reshape(-1, len(COLUMNS))
        return cls(*(arr[:, i] for i in range(len(COLUMNS))))

    @classmethod
    def empty(cls) -> "RadarPoints":
        return cls.from_rows(np.zeros((0, len(COLUMNS))))

    @classmethod
    def concat(cls, parts) -> "RadarPoints":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, c) for p in parts]) for c in COLUMNS))

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, idx) -> "RadarPoints":
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return RadarPoints(*(getattr(self, c)[idx] for c in COLUMNS))

    def rows(self) -> np.ndarray:
        return np.column_stack([getattr(self, c).astype(float) for c in COLUMNS])

    def frames(self) -> list["RadarPoints"]:
        """Detections grouped by timestamp, in time order."""
        if len(self) == 0:
            return []
        order = np.argsort(self.t, kind="stable")
        ts = self.t[order]
        cuts = np.flatnonzero(np.diff(ts)) + 1
        return [self[chunk] for chunk in np.split(order, cuts)]

    def predicted_doppler(self, psi: float) -> np.ndarray:
        return self.ego_speed * np.cos(self.azimuth + psi)


@dataclass(frozen=True)
class RadarObject:
    track_id: int
    points: RadarPoints

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class RadarEstimate:
    yaw: float
    method: str
    confidence_sum: float = math.nan
    iterations: int | None = None
    objects_used: int | None = None
    trace: np.ndarray | None = field(default=None, repr=False)
    frame_yaws: np.ndarray | None = field(default=None, repr=False)


# --------------------------------------------------------------------------
# Doppler velocity method


def _residuals(points: RadarPoints, psi) -> np.ndarray:
    return points.doppler - points.ego_speed * np.cos(points.azimuth + psi)


def coarse_yaw_search(
    points: RadarPoints,
    A: float = math.radians(45.0),
    n_step: float = math.radians(5.0),
    residual_tol: float = 0.5,
) -> float:
    """Grid candidate explaining the most detections as static.

    Candidates are ``-A, -A + n_step, ..., A``.  Ties go to the smaller
    ``|psi|``; remaining ties (``+psi`` vs ``-psi``) to the lower squared
    residual over the consensus set.
    """
    if not (A > 0 and 0 < n_step <= A):
        raise InvalidInputError("need A > 0 and 0 < n_step <= A")
    if len(points) == 0:
        raise EmptyInputError("no radar points")
    k = int(math.floor(2 * A / n_step + 1e-9))
    cands = -A + n_step * np.arange(k + 1)
    res = np.abs(_residuals(points, cands[:, None]))
    ok = res < residual_tol
    counts = ok.sum(axis=1)
    if counts.max() == 0:
        raise NoConsensusError("no yaw candidate explains any detection as static")
    sq = np.where(ok, res * res, 0.0).sum(axis=1)
    best = np.lexsort((sq, np.round(np.abs(cands), 12), -counts))[0]
    return float(cands[best])


def select_static_points(points: RadarPoints, psi: float, residual_tol: float = 0.5) -> RadarPoints:
    if residual_tol <= 0:
        raise InvalidInputError("residual_tol must be positive")
    return points[np.abs(_residuals(points, psi)) < residual_tol]


def fit_cosine_yaw(
    static_points: RadarPoints,
    psi_init: float,
    max_deviation: float = math.radians(45.0),
    max_iter: int = 100,
    tol: float = 1e-13,
) -> float:
    """Least-squares yaw of the Doppler cosine curve.

    Damped Gauss-Newton in one variable: the step ``-sum(J r) / sum(J^2)``
    is halved until the cost decreases.  The result is kept within
    ``max_deviation`` of ``psi_init``.
    """
    p = static_points
    if len(p) == 0:
        raise EmptyInputError("no static points to fit")
    if np.any(p.ego_speed <= 0):
        raise InvalidInputError("cosine fit needs positive ego speed")
    psi = float(psi_init)
    lo, hi = psi - max_deviation, psi + max_deviation

    def cost(x):
        r = _residuals(p, x)
        return float(r @ r)

    c = cost(psi)
    for _ in range(max_iter):
        r = _residuals(p, psi)
        J = p.ego_speed * np.sin(p.azimuth + psi)
        jj = float(J @ J)
        if jj < 1e-18 * max(1.0, float(p.ego_speed @ p.ego_speed)):
            if c == 0.0:
                break
            raise UnobservableError("cosine fit gradient vanishes; yaw is unobservable from these azimuths")
        step = -float(J @ r) / jj
        improved = False
        for _ in range(40):
            cand = min(max(psi + step, lo), hi)
            cc = cost(cand)
            if cc < c:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        moved = abs(cand - psi)
        psi, c = cand, cc
        if moved < tol:
            break
    return float(wrap_angle(psi))


def refine_yaw_iterative(
    frames,
    psi_init: float,
    iterations: int = 500,
    residual_tol: float = 0.5,
    burn_in: float = 0.25,
    max_deviation: float = math.radians(45.0),
) -> RadarEstimate:
    """Per-frame select-and-fit loop.

    Iteration ``k`` uses frame ``k mod len(frames)``.  Frames with fewer
    than two static points, or whose fit is unobservable, are skipped and
    leave the running yaw unchanged.  The estimate is the circular mean of
    the per-iteration yaws after the first ``burn_in`` fraction.

    ``trace`` is the running average of all yaws recorded so far (the
    quantity that settles as iterations accumulate); ``frame_yaws`` holds
    the raw per-iteration yaw, NaN where the frame was skipped.
    """
    if iterations < 1:
        raise InvalidInputError("iterations must be >= 1")
    frames = [f for f in frames if len(f)]
    if not frames:
        raise EmptyInputError("no radar frames")
    psi = float(psi_init)
    raw = np.full(iterations, np.nan)
    trace = np.empty(iterations)
    sx = sy = 0.0
    for k in range(iterations):
        frame = frames[k % len(frames)]
        static = select_static_points(frame, psi, residual_tol)
        static = static[static.ego_speed > 0]
        if len(static) >= 2:
            try:
                psi = fit_cosine_yaw(static, psi, max_deviation)
                raw[k] = psi
                sx += math.cos(psi)
                sy += math.sin(psi)
            except UnobservableError:
                pass
        trace[k] = math.atan2(sy, sx) if (sx or sy) else psi
    start = int(math.floor(burn_in * iterations))
    tail = raw[start:]
    tail = tail[np.isfinite(tail)]
    if tail.size == 0:
        raise NoValidDataError("no frame produced a yaw after burn-in")
    return RadarEstimate(circular_mean(tail), "velocity", iterations=iterations, trace=trace, frame_yaws=raw)


# --------------------------------------------------------------------------
# Position method


def group_objects(points: RadarPoints, min_track_frames: int = 5) -> list[RadarObject]:
    """Split each track into runs over consecutive frames.

    Frames are the distinct timestamps of ``points`` in order; a track that
    skips a frame starts a new run.  Runs shorter than ``min_track_frames``
    are dropped.  Within a frame only the first detection of a track is kept.
    """
    if min_track_frames < 2:
        raise InvalidInputError("min_track_frames must be >= 2")
    if len(points) == 0:
        return []
    _, frame_idx = np.unique(points.t, return_inverse=True)
    objects = []
    for tid in np.unique(points.track_id):
        rows = np.flatnonzero(points.track_id == tid)
        rows = rows[np.argsort(frame_idx[rows], kind="stable")]
        fi = frame_idx[rows]
        first = np.concatenate([[True], np.diff(fi) > 0])
        rows, fi = rows[first], fi[first]
        cuts = np.flatnonzero(np.diff(fi) > 1) + 1
        for run in np.split(rows, cuts):
            if len(run) >= min_track_frames:
                objects.append(RadarObject(int(tid), points[run]))
    objects.sort(key=lambda o: (o.points.t[0], o.track_id))
    return objects


def _baseline(p: RadarPoints, i: int) -> float:
    return math.hypot(p.ego_x[i] - p.ego_x[0], p.ego_y[i] - p.ego_y[0])


def _clamped_acos(x: float) -> float:
    return math.acos(min(1.0, max(-1.0, x)))


def is_static_object(obj: RadarObject, e: float = 0.02, d_min: float = 1.0) -> bool:
    """Triangle test of every detection against the first one.

    For a static target, the angle at the object between the two sensor
    positions (law of cosines on ranges and ego baseline) equals the change
    in azimuth.  Azimuth changes are compared in magnitude, since the
    law-of-cosines angle is unsigned.  Pairs with baseline ``<= d_min`` are
    skipped.
    """
    p = obj.points
    if len(p) < 2:
        raise InvalidInputError("object needs at least two detections")
    informative = 0
    l0, th0 = p.range[0], p.azimuth[0]
    for i in range(1, len(p)):
        d = _baseline(p, i)
        if d <= d_min:
            continue
        informative += 1
        li = p.range[i]
        angle = _clamped_acos((li * li + l0 * l0 - d * d) / (2 * li * l0))
        if abs(angle - abs(wrap_angle(p.azimuth[i] - th0))) >= e:
            return False
    if informative == 0:
        raise IndeterminateError("no detection pair has an ego baseline above d_min")
    return True


def _point(p) -> tuple[float, float, float, float, float]:
    if isinstance(p, RadarPoints):
        if len(p) != 1:
            raise InvalidInputError("expected a single detection")
        return float(p.range[0]), float(p.azimuth[0]), float(p.ego_x[0]), float(p.ego_y[0]), float(p.doppler[0])
    return float(p["range"]), float(p["azimuth"]), float(p["ego_x"]), float(p["ego_y"]), float(p.get("doppler", math.nan))


def yaw_from_pair(P0, Pi, d_min: float = 1.0) -> float:
    """Mounting yaw from one static target seen from two ego positions.

    The vehicle is assumed to drive straight from ``P0`` to ``Pi``, so the
    baseline is the forward axis.  The triangle angle at each ego position
    is the target bearing from forward (at ``P0``) or from backward (at
    ``Pi``, hence the supplement).  Both give a yaw; their mean is returned.
    Which side of the road the target is on follows from the sign of the
    azimuth change.
    """
    l0, th0, x0, y0, _ = _point(P0)
    li, thi, xi, yi, _ = _point(Pi)
    d = math.hypot(xi - x0, yi - y0)
    if d <= d_min:
        raise IndeterminateError(f"ego baseline {d:.3f} m is not above d_min")
    c0 = (l0 * l0 + d * d - li * li) / (2 * d * l0)
    ci = (li * li + d * d - l0 * l0) / (2 * d * li)
    c0, ci = min(1.0, max(-1.0, c0)), min(1.0, max(-1.0, ci))
    if math.sqrt(1 - c0 * c0) < 1e-6 or math.sqrt(1 - ci * ci) < 1e-6:
        raise CollinearError("target lies on the ego baseline")
    dth = wrap_angle(thi - th0)
    if dth == 0:
        raise CollinearError("azimuth does not change between the two detections")
    s = 1.0 if dth > 0 else -1.0
    psi2 = s * math.acos(c0) - th0
    psi1 = s * (math.pi - math.acos(ci)) - thi
    return float(wrap_angle(psi2 + 0.5 * wrap_angle(psi1 - psi2)))


def estimation_confidence(P, psi, cos_floor: float = 1e-3):
    """Doppler consistency of a detection with yaw ``psi``, in ``[0, 1]``.

    ``1 - |doppler / cos(azimuth + psi) - ego_speed| / ego_speed``, clamped;
    zero when the cosine is below ``cos_floor`` in magnitude.  Accepts a
    single detection or a :class:`RadarPoints` (with ``psi`` broadcast).
    """
    if isinstance(P, RadarPoints):
        v, th, vg = P.doppler, P.azimuth, P.ego_speed
    else:
        v, th, vg = P["doppler"], P["azimuth"], P["ego_speed"]
    v, th, vg = (np.asarray(a, dtype=float) for a in (v, th, vg))
    if np.any(vg <= 0):
        raise InvalidInputError("confidence needs positive ego speed")
    cs = np.cos(th + np.asarray(psi, dtype=float))
    ok = np.abs(cs) > cos_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 1.0 - np.abs(v / np.where(ok, cs, 1.0) - vg) / vg
    c = np.where(ok, np.clip(c, 0.0, 1.0), 0.0)
    return float(c) if c.ndim == 0 else c


def weighted_yaw(estimates) -> RadarEstimate:
    """Confidence-weighted angular average of ``(psi, c)`` pairs."""
    est = np.asarray(list(estimates), dtype=float).reshape(-1, 2)
    if len(est) == 0:
        raise EmptyInputError("no yaw estimates")
    total = float(est[:, 1].sum())
    if total <= 0:
        raise NoValidDataError("total confidence is zero")
    return RadarEstimate(weighted_angle_mean(est[:, 0], est[:, 1]), "position", confidence_sum=total)


@dataclass
class PositionConfig:
    e: float = 0.02
    d_min: float = 1.0
    min_track_frames: int = 5
    segment_min_length: float = 50.0
    segment_max_heading_dev: float = math.radians(5.0)
    rdp_tolerance: float = 0.5
    cos_floor: float = 1e-3


def _ego_track(points: RadarPoints):
    t, first = np.unique(points.t, return_index=True)
    return t, np.column_stack([points.ego_x[first], points.ego_y[first]])


def calibrate_radar_position(points: RadarPoints, config: PositionConfig | dict | None = None) -> RadarEstimate:
    """Position-informed yaw over all straight stretches of the ego path."""
    if config is None:
        config = PositionConfig()
    elif isinstance(config, dict):
        config = PositionConfig(**config)
    if len(points) == 0:
        raise EmptyInputError("no radar points")
    t, xy = _ego_track(points)
    if len(t) < 2:
        raise NoStraightSegmentError("ego path has fewer than two positions")
    segments = extract_straight_segments(t, xy, config.segment_min_length, config.segment_max_heading_dev, config.rdp_tolerance)
    if not segments:
        raise NoStraightSegmentError("ego path has no straight segment")
    pairs = []
    used = 0
    for seg in segments:
        sub = points[(points.t >= seg.t_start) & (points.t <= seg.t_end)]
        for obj in group_objects(sub, config.min_track_frames):
            try:
                if not is_static_object(obj, config.e, config.d_min):
                    continue
            except IndeterminateError:
                continue
            p = obj.points
            got = 0
            for i in range(1, len(p)):
                try:
                    psi = yaw_from_pair(p[0], p[i], config.d_min)
                except (IndeterminateError, CollinearError):
                    continue
                c = estimation_confidence(p[i], psi, config.cos_floor)
                pairs.append((psi, float(np.asarray(c).reshape(-1)[0])))
                got += 1
            used += got > 0
    if not pairs:
        raise NoStaticObjectError("no static object with a usable detection pair")
    out = weighted_yaw(pairs)
    out.objects_used = used
    return out


# --------------------------------------------------------------------------
# Estimators


class RadarVelocityCalibrator(BaseEstimator):
    """Doppler velocity method: coarse grid, then the iterated cosine fit.

    If ``psi_init`` is None the coarse search result seeds the refinement.

    Attributes: ``coarse_yaw_``, ``yaw_``, ``trace_``, ``estimate_``.
    """

    def __init__(
        self,
        A=math.radians(45.0),
        n_step=math.radians(5.0),
        residual_tol=0.5,
        iterations=500,
        burn_in=0.25,
        psi_init=None,
    ):
        self.A = A
        self.n_step = n_step
        self.residual_tol = residual_tol
        self.iterations = iterations
        self.burn_in = burn_in
        self.psi_init = psi_init

    def fit(self, points: RadarPoints, y=None):
        self.coarse_yaw_ = coarse_yaw_search(points, self.A, self.n_step, self.residual_tol)
        init = self.coarse_yaw_ if self.psi_init is None else self.psi_init
        est = refine_yaw_iterative(points.frames(), init, self.iterations, self.residual_tol, self.burn_in, self.A)
        self.estimate_ = est
        self.yaw_ = est.yaw
        self.trace_ = est.trace
        return self

    def predict(self, points: RadarPoints) -> np.ndarray:
        """Boolean mask of detections consistent with a static world."""
        check_is_fitted(self, "yaw_")
        return np.abs(_residuals(points, self.yaw_)) < self.residual_tol


class RadarPositionCalibrator(BaseEstimator):
    """Position-informed method; see :func:`calibrate_radar_position`."""

    def __init__(
        self,
        e=0.02,
        d_min=1.0,
        min_track_frames=5,
        segment_min_length=50.0,
        segment_max_heading_dev=math.radians(5.0),
        rdp_tolerance=0.5,
    ):
        self.e = e
        self.d_min = d_min
        self.min_track_frames = min_track_frames
        self.segment_min_length = segment_min_length
        self.segment_max_heading_dev = segment_max_heading_dev
        self.rdp_tolerance = rdp_tolerance

    def fit(self, points: RadarPoints, y=None):
        cfg = PositionConfig(**self.get_params())
        est = calibrate_radar_position(points, cfg)
        self.estimate_ = est
        self.yaw_ = est.yaw
        self.objects_used_ = est.objects_used
        self.confidence_sum_ = est.confidence_sum
        return self
