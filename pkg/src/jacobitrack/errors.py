"""Exception types shared across the package."""


class JacobitrackError(Exception):
    """Base class for package errors."""


class ConfigError(JacobitrackError):
    """Invalid pipeline or CLI configuration."""


class DataError(JacobitrackError):
    """Malformed or inconsistent input data."""


class InternalInvariantError(JacobitrackError):
    """An internal invariant was violated; indicates a bug, not bad input."""
