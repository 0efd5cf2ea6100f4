"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes of the operands do not line up."""


class ParameterError(ValueError):
    """A numeric parameter is outside its valid range."""


class NumericError(RuntimeError):
    """A computation produced non-finite values."""


class SingularMatrixError(RuntimeError):
    """A factorization hit a pivot too small to trust."""


class WeightFormatError(ValueError):
    """A weight file is malformed; the message names the offending position."""


class PreconditionError(ValueError):
    """A check was invoked below its required measurement count."""


class ConfigError(ValueError):
    """An experiment configuration is missing or malformed."""
