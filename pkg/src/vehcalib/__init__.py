"""Rotation calibration of vehicle-mounted sensors against the car body."""

from .camera import CameraCalibrator, Intrinsics, VPObservations, mount_from_observation
from .exceptions import CalibrationError
from .geom import EulerYPR, circular_mean, circular_std, wrap_angle
from .gnss import GnssCalibrator, gnss_yaw_offset
from .lidar import LidarCalibrator, PlaneModel, PointCloudFrame, calibrate_lidar
from .radar import RadarPoints, RadarPositionCalibrator, RadarVelocityCalibrator, calibrate_radar_position
from .trajectory import MotionGates, Poses, fit_spline, heading_offset

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "CameraCalibrator",
    "EulerYPR",
    "GnssCalibrator",
    "Intrinsics",
    "LidarCalibrator",
    "MotionGates",
    "PlaneModel",
    "PointCloudFrame",
    "Poses",
    "RadarPoints",
    "RadarPositionCalibrator",
    "RadarVelocityCalibrator",
    "VPObservations",
    "calibrate_lidar",
    "calibrate_radar_position",
    "circular_mean",
    "circular_std",
    "fit_spline",
    "gnss_yaw_offset",
    "heading_offset",
    "mount_from_observation",
    "wrap_angle",
]
