"""Exception hierarchy shared by every crcen module."""


class CrcenError(Exception):
    """Base class for all errors raised by crcen."""


class ShapeError(CrcenError, ValueError):
    """Array dimensions do not chain."""


class ParameterError(CrcenError, ValueError):
    """A scalar argument is outside its valid range."""


class ConfigError(CrcenError, ValueError):
    """An invalid model or training configuration."""


class DataError(CrcenError, ValueError):
    """Malformed or unusable input data (bad labels, single class, parse failure)."""


class NumericError(CrcenError, ArithmeticError):
    """Non-finite values appeared during computation."""


class DegenerateProbabilitiesError(NumericError):
    """A ratio of summed probabilities has a zero denominator."""
