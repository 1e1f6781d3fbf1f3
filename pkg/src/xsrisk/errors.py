"""Exception types raised across the package."""


class XsriskError(Exception):
    """Base class for all package errors."""


class DimensionError(XsriskError, ValueError):
    """Array shapes do not line up."""


class DomainError(XsriskError, ValueError):
    """A parameter or distribution lies outside its admissible domain."""


class DegenerateInputError(XsriskError, ValueError):
    """Input carries no usable probability mass for the requested quantity."""


class ConsistencyError(XsriskError, ArithmeticError):
    """Two computations that must agree do not; signals an upstream bug."""


class NumericalError(XsriskError, ArithmeticError):
    """An iterative numerical routine failed to meet its tolerance."""


class ConfigError(XsriskError, ValueError):
    """Invalid run configuration."""
