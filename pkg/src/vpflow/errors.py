"""Exception hierarchy shared by all vpflow modules."""


class VpflowError(Exception):
    """Base class for all errors raised by vpflow."""


class UsageError(VpflowError):
    """A caller violated a precondition (bad index, missing history, ...)."""


class ConfigError(VpflowError):
    """A configuration file or RunConfig is invalid."""


class NumericalConsistencyError(VpflowError):
    """A numerical sanity check failed (e.g. non-neutral charge density)."""


class FitError(VpflowError):
    """A data fit could not be performed (e.g. too few peaks)."""
