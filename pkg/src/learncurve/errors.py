"""Exception hierarchy shared across the package."""


class LearnCurveError(Exception):
    """Base class for all errors raised by this package."""


class IdentifiabilityError(LearnCurveError):
    """Too few distinct sample sizes to identify the curve parameters."""


class NumericalError(LearnCurveError):
    """A numerical routine failed (non-finite objective, Cholesky breakdown).

    Carries the last iterate (if any) in ``payload`` for post-mortem use.
    """

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class UndefinedMetricError(LearnCurveError):
    """The requested metric is undefined on the given data (e.g. a
    single-class test split, or no usable pairs)."""


class FittingError(LearnCurveError):
    """A predictor cannot be fitted on the given data (single-class
    outcome, zero events, constant columns)."""


class CalibrationError(FittingError):
    """Calibration cannot be performed (single-class calibration labels)."""


class SchemaError(LearnCurveError):
    """Feature columns do not match what a fitted model expects."""


class ConfigError(LearnCurveError):
    """Invalid or incompatible configuration detected before any work."""


class NotConvergedError(LearnCurveError):
    """Refusing to predict from a fit that did not converge (pass
    ``force=True`` to override)."""


class LoadError(LearnCurveError):
    """A cohort file could not be loaded or violates its declared schema."""
