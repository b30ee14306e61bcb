"""Exception types shared across the package."""


class CurveShiftError(Exception):
    """Base class for all package-specific errors."""


class NoIntersection(CurveShiftError):
    """Supply lies strictly above demand over the whole volume domain."""


class MonotonicityViolation(CurveShiftError):
    """A constructed inverse curve is not monotone (corrupt input data)."""


class DimensionMismatch(CurveShiftError):
    """A coefficient or feature vector has the wrong length."""


class SchemaError(CurveShiftError):
    """A source file does not conform to the canonical CSV schema."""


class UnitError(CurveShiftError):
    """A physical quantity has an impossible value, e.g. a negative volume."""


class InvalidConfig(CurveShiftError):
    """A configuration object violates its invariants."""


class RankDeficient(CurveShiftError):
    """Design matrix is numerically rank deficient (collinear regressors)."""


class NonFiniteObjective(CurveShiftError):
    """The objective returned NaN or infinity during optimization."""


class MissingConstituent(CurveShiftError):
    """A mixture prediction was requested without its component fits."""


class InsufficientData(CurveShiftError):
    """Dataset is too short or too sparse for the requested window layout."""


class NegativeRadicand(CurveShiftError):
    """Capacity scaling factor is undefined for the given (gamma, rho)."""


class EmptyInput(CurveShiftError):
    """An aggregate was requested over an empty residual set."""
