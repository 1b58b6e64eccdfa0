"""Exception hierarchy shared across the toolkit."""


class MsiDesignError(Exception):
    """Base class for all toolkit errors."""


class AllZeroSensorError(MsiDesignError):
    """Sensor has no strictly positive sensitivity value to normalize by."""


class TargetOutOfRangeError(MsiDesignError):
    """A target wavelength lies outside the sensor's sampled range."""


class ZeroColumnError(MsiDesignError):
    """A design-matrix column is all zero: that wavelength is unrecoverable."""


class InfeasibleAllocationError(MsiDesignError):
    """Allocation violates distinctness or coverage of the target set."""


class NotMinimumCaseError(MsiDesignError):
    """Operation requires the square minimum case (k = C, n_cam*C = p)."""


class NoFeasibleAllocationError(MsiDesignError):
    """Every enumerated allocation was numerically rank-deficient."""


class RankDeficientError(MsiDesignError):
    """System matrix is numerically rank-deficient; least squares is not unique."""


class SingularBlockError(MsiDesignError):
    """A per-camera block of the minimum-case factorization is singular."""


class GridMismatchError(MsiDesignError):
    """Scene spectrum does not cover the sensor wavelength range."""


class CorruptTableError(MsiDesignError):
    """Index-table file failed validation on load."""


class IndexTableIOError(MsiDesignError):
    """Index-table file could not be read or written."""


class SensorFormatError(MsiDesignError):
    """Sensor CSV file is malformed."""


class ConfigError(MsiDesignError):
    """Run configuration is missing, malformed, or self-inconsistent."""


class BandOutsideRangeWarning(UserWarning):
    """More than 1% of a band's Gaussian mass falls outside the sensor grid."""
