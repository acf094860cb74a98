"""Exception hierarchy shared across the library."""


class DtdssError(Exception):
    """Base class for all library errors."""


class InvalidInputError(DtdssError, ValueError):
    """Non-finite or out-of-contract input value."""


class SaturationOverflowError(InvalidInputError):
    """Vapor pressure at or above total pressure."""


class InsufficientHistoryError(DtdssError):
    """A derivative window does not yet hold enough samples."""


class OrderingError(DtdssError):
    """Timestamps went backwards or repeated within one stream."""


class FixedRangeError(DtdssError, OverflowError):
    """Value not representable in the requested fixed-point format."""


class CalibrationError(DtdssError):
    """Base class for calibration fit failures."""


class NoStepError(CalibrationError):
    """Step-response series contains no detectable cooling decay."""


class InsufficientSignalError(CalibrationError):
    """Detected decay amplitude too small to fit."""


class InsufficientSettlingError(CalibrationError):
    """Dark series shorter than the required settling span."""


class NoSignalError(CalibrationError):
    """Gain fit input contains no daylight samples."""


class MetricError(DtdssError):
    """Metric undefined for the given inputs."""


class AlignmentError(DtdssError):
    """Two series share no overlapping timestamps."""


class IntegrationError(DtdssError):
    """Forward simulator could not take a stable step."""
