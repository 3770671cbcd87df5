"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter, config key, or precondition violation."""


class GridMismatchError(ConfigurationError):
    """Two fields that must share a grid do not."""


class FieldInvariantError(ValueError):
    """A spectral field violates one of its structural invariants."""


class IntegrationError(RuntimeError):
    """Time integration failed (instability, NaN, or CFL violation)."""
