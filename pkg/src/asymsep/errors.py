"""Exception types raised by asymsep."""


class AsymSepError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(AsymSepError, ValueError):
    """Window or run parameters violate their constraints."""


class ConfigMismatchError(AsymSepError, ValueError):
    """Two objects that must share time-frequency geometry do not."""


class EmptySpectrogramError(AsymSepError, ValueError):
    """Signal too short to produce a single analysis frame."""


class EmptySignalError(AsymSepError, ValueError):
    """Signal has no content above the silence threshold."""


class DataError(AsymSepError):
    """Input data is unusable (length/rate mismatch, unreadable file)."""
