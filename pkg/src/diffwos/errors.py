"""Exception types shared across the library."""


class DiffWosError(Exception):
    """Base class for all library errors."""


class DomainError(DiffWosError):
    """An evaluation point lies outside the domain."""


class ConfigError(DiffWosError):
    """Invalid or inconsistent configuration."""


class SingularityError(DiffWosError):
    """Evaluation too close to a field singularity (e.g. a monopole)."""


class StaleQueryError(DiffWosError):
    """A boundary query refers to an outdated scene revision."""


class UnsupportedBoundaryError(DiffWosError):
    """Operation not available for the active boundary representation."""


class NumericalError(DiffWosError):
    """Numerical failure during estimation."""
