"""Exception hierarchy shared by all swipeauth modules."""


class SwipeAuthError(Exception):
    """Base class for every error raised by this package."""


class InvalidMetadataError(SwipeAuthError):
    """Screen dimensions or other sequence metadata are unusable."""


class MalformedSequenceError(SwipeAuthError):
    """A touch sequence violates its invariants (timestamps, pressure, length)."""


class ShapeError(SwipeAuthError):
    """A tensor or vector does not have the contracted shape."""


class NumericError(SwipeAuthError):
    """A numeric computation produced non-finite values.

    ``stage`` names the pipeline stage that failed.
    """

    def __init__(self, message: str, stage: str = ""):
        super().__init__(message)
        self.stage = stage


class ConfigError(SwipeAuthError):
    """A run or training configuration is inconsistent or unsatisfiable."""


class EnrollmentError(SwipeAuthError):
    """Gallery enrollment received unusable input."""


class ProtocolError(SwipeAuthError):
    """The evaluation protocol cannot be run on the given data."""


class DataFormatError(SwipeAuthError):
    """A manifest, swipe file, or checkpoint violates its schema."""


class GenerationError(SwipeAuthError):
    """Synthetic data generation received degenerate parameters."""


class SplitError(SwipeAuthError):
    """A user split would leave one side empty."""


class ConvergenceError(SwipeAuthError):
    """An iterative solver hit its iteration cap before converging.

    ``residual`` carries the remaining constraint violation.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual
