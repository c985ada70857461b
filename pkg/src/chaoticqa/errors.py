"""Exception types shared across the package."""


class ChaoticQAError(Exception):
    """Base class for all package errors."""


class ResourceLimitError(ChaoticQAError):
    """Requested system size exceeds the configured memory/size gate."""


class DimensionMismatchError(ChaoticQAError, ValueError):
    pass


class NotHermitianError(ChaoticQAError, ValueError):
    pass


class NotFlipSymmetricError(ChaoticQAError, ValueError):
    """Operator does not commute with the global spin flip X...X."""


class DegenerateGroundStateError(ChaoticQAError):
    """Driver ground state is degenerate and no tie-break was requested."""


class IntegrationError(ChaoticQAError):
    """Time integration failed (step-size underflow or excessive norm drift)."""


class ConfigError(ChaoticQAError, ValueError):
    pass
