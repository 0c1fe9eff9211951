"""Exception types shared across the package."""


class SrdgError(Exception):
    """Base class for all package errors."""


class FormatError(SrdgError):
    """Malformed instance, schedule, or geo input."""


class ShapeError(SrdgError):
    """Operation called on a graph of the wrong shape."""


class BudgetExceededError(SrdgError):
    """A search exceeded its node budget; no verdict was reached."""


class ResourceLimitError(SrdgError):
    """A solver exceeded its configured state or memory limit."""


class BackendError(SrdgError):
    """An external solver backend failed or returned garbage."""


class BackendInfeasibleError(BackendError):
    """The backend proved the model infeasible."""
