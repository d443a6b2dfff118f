"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments and geometric domain errors;
the classes below mark failure modes callers may want to catch separately.
"""


class TrackGymError(Exception):
    """Base class for package-specific failures."""


class ConfigError(TrackGymError):
    """Invalid configuration file, key, or value."""


class TemporalOrderError(TrackGymError):
    """An operation was asked to move backwards in time."""


class NumericalError(TrackGymError):
    """Linear-algebra failure (non-PSD covariance, singular innovation)."""


class LifecycleError(TrackGymError):
    """Environment used out of order (step before reset, step after end)."""
