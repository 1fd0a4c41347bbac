"""Exception types shared across the package."""


class BintrackError(ValueError):
    """Base class for all package-specific errors."""


class InvalidPolynomialError(BintrackError):
    """Polynomial coefficients are malformed (empty, non-finite, zero constant term where one is required)."""


class UnstablePolynomialError(BintrackError):
    """A polynomial required to be stable has a root on or inside the closed unit disk."""


class DomainError(BintrackError):
    """A numeric argument lies outside the domain of the requested map."""


class MetricError(BintrackError):
    """A projection metric is not symmetric positive definite."""


class DegenerateGainError(BintrackError):
    """The leading impulse-response estimate is too close to zero to divide by."""


class IdentifiabilityError(BintrackError):
    """The Toeplitz recovery system is numerically rank deficient."""


class SequencingError(BintrackError):
    """An operation was called out of order for the object's lifecycle."""


class ConfigError(BintrackError):
    """An experiment configuration is malformed or contains unknown keys."""
