"""Heading offset of a GNSS/INS unit relative to the vehicle body."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import InvalidInputError, StandstillError
from .trajectory import MotionGates, Poses, heading_offset, smoothing_budget

GNSS_GATES = MotionGates(v_min_sq=4.0, c_max=0.01)


@dataclass
class GnssEstimate:
    yaw_offset: float
    used_count: int
    dispersion: float


def gnss_yaw_offset(poses: Poses, gates: MotionGates = GNSS_GATES, degree: int = 3, pos_sigma: float = 0.0) -> GnssEstimate:
    """Mean difference between the INS yaw and the trajectory heading.

    Uses the same machinery as the LiDAR yaw (no roll/pitch correction:
    the INS attitude is taken as reported).  Raises
    :class:`~vehcalib.exceptions.StandstillError` if the vehicle never
    exceeds the speed gate.

    ``pos_sigma`` (metres) is the expected position noise.  At zero the
    trajectory spline interpolates every sample; a positive value switches
    to a smoothing spline with a residual budget of ``n * pos_sigma**2``,
    which keeps the curvature gate usable on noisy positions.
    """
    if not isinstance(poses, Poses):
        raise InvalidInputError("poses must be a Poses instance")
    if len(poses) >= 2:
        step = np.linalg.norm(np.diff(poses.xy, axis=0), axis=1)
        dt = np.diff(poses.t)
        if np.all(step * step < gates.v_min_sq * dt * dt):
            raise StandstillError("vehicle never moves faster than the speed gate")
    res = heading_offset(poses.t, poses.xy, poses.yaw, gates, degree=degree, smoothing=smoothing_budget(len(poses), pos_sigma))
    return GnssEstimate(res.offset, res.used_count, res.dispersion)


class GnssCalibrator(BaseEstimator):
    """Estimator form of :func:`gnss_yaw_offset`.

    After ``fit``: ``yaw_offset_``, ``used_count_``, ``dispersion_``.
    """

    def __init__(self, v_min_sq=4.0, c_max=0.01, spline_degree=3, pos_sigma=0.0):
        self.v_min_sq = v_min_sq
        self.c_max = c_max
        self.spline_degree = spline_degree
        self.pos_sigma = pos_sigma

    def fit(self, poses: Poses, y=None):
        est = gnss_yaw_offset(poses, MotionGates(self.v_min_sq, self.c_max), self.spline_degree, self.pos_sigma)
        self.yaw_offset_ = est.yaw_offset
        self.used_count_ = est.used_count
        self.dispersion_ = est.dispersion
        return self

    def estimate(self) -> GnssEstimate:
        return GnssEstimate(self.yaw_offset_, self.used_count_, self.dispersion_)
