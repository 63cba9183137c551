"""Exception hierarchy shared across the package."""


class SciError(Exception):
    """Base class for all package errors."""


class DimensionError(SciError, ValueError):
    pass


class ParameterError(SciError, ValueError):
    pass


class ConfigError(SciError, ValueError):
    pass


class SizeError(SciError, ValueError):
    pass


class MaskError(SciError, ValueError):
    """Raised for masks with dead pixels or non-finite entries."""


class GenerationError(SciError, RuntimeError):
    pass


class NumericalError(SciError, ArithmeticError):
    """A NaN or Inf appeared in an iterate."""


class TensorFormatError(SciError, IOError):
    pass


class BadMagicError(TensorFormatError):
    pass


class BadVersionError(TensorFormatError):
    pass


class BadDtypeError(TensorFormatError):
    pass


class BadRankError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class TrailingDataError(TensorFormatError):
    pass
