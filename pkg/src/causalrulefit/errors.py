"""Exception types shared across the package."""


class CausalRuleFitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CausalRuleFitError, ValueError):
    """Input data or an argument failed validation."""


class ColumnError(ValidationError):
    """A named column is missing, duplicated, or plays two roles at once."""


class ParseError(ValidationError):
    """A file could not be parsed; the message carries row/column context."""


class ConfigError(ValidationError):
    """A configuration value is out of its admissible range."""


class PropensityRangeError(ValidationError):
    """A propensity score fell outside the open interval (0, 1)."""


class ShapeError(ValidationError):
    """An array argument has the wrong shape or dimensionality."""


class FoldConstructionError(ValidationError):
    """Cross-validation folds could not be built (an arm is too small)."""


class ConvergenceError(CausalRuleFitError):
    """The solver hit its sweep budget before converging.

    Carries the penalty level and the last coefficient iterate so callers
    can inspect how far the solve got.
    """

    def __init__(self, message, lam=None, coefs=None):
        super().__init__(message)
        self.lam = lam
        self.coefs = coefs


class FormatVersionError(CausalRuleFitError):
    """A serialized model declares a format version we cannot read."""
