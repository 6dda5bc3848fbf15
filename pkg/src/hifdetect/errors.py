"""Exception types raised across the detection pipeline."""


class HifDetectError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(HifDetectError, ValueError):
    pass


class ConfigurationError(HifDetectError, ValueError):
    pass


class InstabilityError(HifDetectError, RuntimeError):
    """Integrator state grew past the sanity bound; parameters are bad."""


class CalibrationError(HifDetectError, RuntimeError):
    pass


class WithheldEstimate(HifDetectError):
    """An estimator declined to produce a value for a window.

    Subclasses carry the reason. The pipeline records these as gaps.
    """


class LowCurrentError(WithheldEstimate):
    pass


class RankDeficiencyError(WithheldEstimate):
    pass


class InsufficientDataError(HifDetectError, ValueError):
    pass
