"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and NumericalError (plus any
floating-point failure) to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid run configuration; message carries the offending field path."""


class NumericalError(RuntimeError):
    """An iteration or decomposition failed to converge or lost structure."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class UnphysicalStateError(ValueError):
    """A covariance matrix or derived quantity violates physicality."""


class InvalidCovarianceError(ValueError):
    """A statistics bundle has an impossible covariance structure."""


class DegenerateMeasurementError(ValueError):
    """Conditioning on a quadrature with (near-)zero variance."""


class CutoffError(ValueError):
    """A Fock-space cutoff is too small for the requested operation."""
