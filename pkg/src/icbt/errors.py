"""Exception types shared across the package."""


class IcbtError(Exception):
    """Base class for package-specific errors."""


class DataError(IcbtError):
    """Malformed or unusable comparison data (bad files, disconnected graphs)."""


class InvariantError(IcbtError):
    """A model state violated a structural invariant; carries a diagnostic dump."""
