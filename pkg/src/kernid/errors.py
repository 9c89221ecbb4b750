"""Exception types shared across kernid."""


class KernidError(Exception):
    """Base class for all kernid errors."""


class DimensionMismatch(KernidError, ValueError):
    """Points or designs have incompatible dimensions for the kernel family."""


class NotFound(KernidError, LookupError):
    """A constructive search came back empty."""


class Infeasible(KernidError, ValueError):
    """No admissible (positive-amplitude) solution exists for the requested relation."""


class InvalidBounds(KernidError, ValueError):
    """A search box has a lower bound that is not strictly below its upper bound."""


class NotPsd(KernidError, ArithmeticError):
    """Cholesky factorisation failed even after jitter escalation."""


class ConditionNotMet(KernidError, ValueError):
    """A design does not satisfy the identifiability condition a check requires."""
