"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numerical failures with 3 and signal-processing failures with 4.
"""


class ConfigError(ValueError):
    """A configuration file or parameter set is invalid or incomplete."""


class NumericsError(ArithmeticError):
    """A computation produced non-finite values."""


class SignalProcessingError(RuntimeError):
    """Base class for failures in the interferogram processing chain."""


class CarrierSeparationError(SignalProcessingError):
    """The fringe carrier is too close to DC for sideband isolation."""


class PeakDetectionError(SignalProcessingError):
    """Carrier peak detection on the Fourier magnitude failed."""


class GridMismatchError(SignalProcessingError):
    """Two field maps that must share a grid do not."""


class InsufficientDataError(ValueError):
    """A fit was requested with fewer points than free parameters allow."""


class PeakNotResolvableError(ValueError):
    """An absorption peak needed for a windowed average cannot be located."""
