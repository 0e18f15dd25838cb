"""Exception types shared across the package."""


class HslearnError(Exception):
    """Base class for all package errors."""


class ShapeError(HslearnError):
    """Array dimensions or lengths do not line up."""


class DegenerateInputError(HslearnError):
    """Input is too small or too uniform to support the operation."""


class ParameterError(HslearnError):
    """A parameter is outside its allowed range."""


class SingularMatrixError(HslearnError):
    """A (regularized) linear system is numerically singular."""


class ParseError(HslearnError):
    """A file could not be parsed; the message carries the location."""


class SchemaError(HslearnError):
    """File structure is valid but does not match the expected schema."""


class StratificationError(HslearnError):
    """A class is too small to be split across the requested partitions."""


class DivergenceError(HslearnError):
    """An iterative optimization produced non-finite values."""


class ConfigError(HslearnError):
    """An experiment configuration file is invalid."""
