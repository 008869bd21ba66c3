"""Exception types shared across the package."""


class RijkedaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RijkedaError, ValueError):
    """Invalid configuration: bad value, unknown key, off-grid time, etc."""


class OutOfWindowError(RijkedaError, ValueError):
    """A trajectory was sampled outside its time window [0, T]."""


class NumericalError(RijkedaError, RuntimeError):
    """A computation produced non-finite values."""


class IntegrationDivergedError(NumericalError):
    """Forward integration overflowed. Carries the failing step index."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"state became non-finite at step {step_index}")


class ZeroEnergyError(RijkedaError, ValueError):
    """Modal energy fraction is undefined because total energy is zero."""
