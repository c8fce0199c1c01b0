"""Exception hierarchy.

Every error raised by the calibrators derives from :class:`CalibrationError`
and carries a short machine-readable ``code`` that the CLI copies into its
error reports.
"""


class CalibrationError(ValueError):
    code = "calibration_error"


class InvalidInputError(CalibrationError):
    code = "invalid_input"


class EmptyInputError(CalibrationError):
    code = "empty_input"


class DegenerateError(CalibrationError):
    """Geometry or statistics with no well-defined answer (parallel lines,
    antipodal angle sets, collinear triangles, ...)."""

    code = "degenerate"


class NoValidDataError(CalibrationError):
    """All samples were rejected by a gate or filter."""

    code = "no_valid_data"


class StandstillError(CalibrationError):
    code = "standstill"


class NotGroundPlaneError(CalibrationError):
    code = "not_ground_plane"


class CollinearError(DegenerateError):
    code = "collinear"


class UnobservableError(DegenerateError):
    code = "unobservable"


class IndeterminateError(CalibrationError):
    """A test that needs informative data found none (e.g. no usable baseline)."""

    code = "indeterminate"


class NoConsensusError(NoValidDataError):
    code = "no_consensus"


class NoStraightSegmentError(NoValidDataError):
    code = "no_straight_segment"


class NoStaticObjectError(NoValidDataError):
    code = "no_static_objects"
