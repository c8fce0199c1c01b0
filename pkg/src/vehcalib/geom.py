"""Rotation helpers and wrap-safe angle statistics.

Conventions used throughout the package:

* vehicle frame is x-forward, y-left, z-up;
* Euler triples are intrinsic Z-Y-X, i.e. ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``;
  with this frame a positive pitch tips the sensor's x-axis toward -z
  (nose down);
* rotation matrices act on column vectors from the left;
* angles are radians everywhere except in user-facing reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .exceptions import DegenerateError, EmptyInputError, InvalidInputError

_UNIT_TOL = 1e-6
_PARALLEL_TOL = 1e-15


def wrap_angle(angle):
    """Wrap angle(s) into (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    out = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    # np.mod maps +pi to -pi; the interval is closed at +pi
    out = np.where(out <= -np.pi, out + 2.0 * np.pi, out)
    if out.ndim == 0:
        return float(out)
    return out


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class EulerYPR:
    """Intrinsic Z-Y-X Euler triple (radians)."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def to_matrix(self) -> np.ndarray:
        return euler_to_matrix(self.yaw, self.pitch, self.roll)

    @classmethod
    def from_matrix(cls, R) -> "EulerYPR":
        return cls(*matrix_to_euler(R))

    @classmethod
    def from_degrees(cls, yaw=0.0, pitch=0.0, roll=0.0) -> "EulerYPR":
        return cls(math.radians(yaw), math.radians(pitch), math.radians(roll))

    def as_degrees(self) -> tuple[float, float, float]:
        return (math.degrees(self.yaw), math.degrees(self.pitch), math.degrees(self.roll))


def euler_to_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def matrix_to_euler(R) -> tuple[float, float, float]:
    """Return ``(yaw, pitch, roll)`` of a rotation matrix.

    At gimbal lock (|pitch| = pi/2) roll is set to zero and the whole
    z-rotation is attributed to yaw.
    """
    R = np.asarray(R, dtype=float)
    sp = -R[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = math.asin(sp)
    if abs(sp) > 1.0 - 1e-12:
        yaw = math.atan2(-R[0, 1], R[1, 1])
        roll = 0.0
    else:
        yaw = math.atan2(R[1, 0], R[0, 0])
        roll = math.atan2(R[2, 1], R[2, 2])
    return wrap_angle(yaw), pitch, wrap_angle(roll)


def skew(v) -> np.ndarray:
    """Cross-product matrix, ``skew(a) @ b == cross(a, b)``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def as_unit(v, name: str = "vector") -> np.ndarray:
    """Validate that ``v`` is a 3-vector of unit length and return it."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} must be a finite 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise InvalidInputError(f"{name} is not unit length (norm={np.linalg.norm(v):.9g})")
    return v


def rodrigues(axis, angle: float) -> np.ndarray:
    """Axis-angle to rotation matrix.

    ``R = cos(a) I + (1 - cos(a)) n n^T + sin(a) [n]x``
    """
    n = as_unit(axis, "axis")
    if not math.isfinite(angle):
        raise InvalidInputError("angle must be finite")
    c, s = math.cos(angle), math.sin(angle)
    return c * np.eye(3) + (1.0 - c) * np.outer(n, n) + s * skew(n)


def rotation_between(from_vec, to_vec) -> tuple[np.ndarray, float]:
    """Axis and angle of the minimal rotation taking ``from_vec`` onto ``to_vec``.

    Parallel inputs give angle 0 about the fixed axis (0, 0, 1).  Antiparallel
    inputs have no unique minimal rotation and raise :class:`DegenerateError`.
    """
    a = as_unit(from_vec, "from")
    b = as_unit(to_vec, "to")
    cross = np.cross(a, b)
    cn = np.linalg.norm(cross)
    dot = float(np.clip(a @ b, -1.0, 1.0))
    if cn < _PARALLEL_TOL:
        if dot > 0:
            return np.array([0.0, 0.0, 1.0]), 0.0
        raise DegenerateError("vectors are antiparallel; rotation axis undefined")
    return cross / cn, math.atan2(cn, dot)


def _as_angles(angles: Iterable[float]) -> np.ndarray:
    a = np.asarray(list(angles) if not isinstance(angles, np.ndarray) else angles, dtype=float)
    return a.reshape(-1)


def circular_mean(angles, weights=None) -> float:
    """Mean direction ``atan2(sum sin, sum cos)`` in (-pi, pi]."""
    a = _as_angles(angles)
    if a.size == 0:
        raise EmptyInputError("circular_mean of an empty set")
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    s = float(np.sum(w * np.sin(a)))
    c = float(np.sum(w * np.cos(a)))
    if math.hypot(s, c) < 1e-9 * max(1.0, float(np.sum(np.abs(w)))):
        raise DegenerateError("resultant vector vanishes; mean direction undefined")
    return wrap_angle(math.atan2(s, c))


def circular_std(angles) -> float:
    """Circular standard deviation ``sqrt(-2 ln Rbar)``.

    Evaluated on deviations from the mean direction with ``1 - cos`` written
    as ``2 sin^2(d/2)``, so tightly clustered sets keep full precision and an
    all-identical set gives exactly zero.
    """
    a = _as_angles(angles)
    if a.size < 2:
        raise EmptyInputError("circular_std needs at least two angles")
    s = np.sum(np.sin(a))
    c = np.sum(np.cos(a))
    if math.hypot(s, c) < 1e-12 * a.size:
        return math.inf
    m = math.atan2(s, c)
    d = a - m
    one_minus_c = float(np.mean(2.0 * np.sin(0.5 * d) ** 2))
    s_bar = float(np.mean(np.sin(d)))
    # Rbar^2 = (1 - u)^2 + s^2
    x = -2.0 * one_minus_c + one_minus_c**2 + s_bar**2
    if x >= 0.0:
        return 0.0
    return math.sqrt(-math.log1p(x))


def weighted_angle_mean(angles, weights) -> float:
    """Weighted average of angles, linear in the wrapped deviations.

    The reference direction is the weighted circular mean; the result is that
    reference plus the weighted arithmetic mean of each angle's wrapped
    offset from it.  For tight clusters this is the ordinary weighted
    average, and it stays correct across the +-pi seam.
    """
    a = _as_angles(angles)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if a.size == 0:
        raise EmptyInputError("no angles to average")
    if a.shape != w.shape:
        raise InvalidInputError("angles and weights differ in length")
    if np.any(w < 0):
        raise InvalidInputError("weights must be non-negative")
    total = float(np.sum(w))
    if total <= 0.0:
        raise DegenerateError("total weight is zero")
    ref = circular_mean(a, w)
    dev = wrap_angle(a - ref)
    return wrap_angle(ref + float(np.sum(w * dev)) / total)
