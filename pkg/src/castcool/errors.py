"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so new error types should
subclass one of the three top-level categories below.
"""


class CastcoolError(Exception):
    """Base class for all package errors."""


class ConfigError(CastcoolError):
    """Invalid configuration, geometry or input file (exit code 2)."""


class NumericFailure(CastcoolError):
    """Numerical breakdown during a run (exit code 3)."""


class StabilityError(NumericFailure):
    """Requested time step violates the explicit stability bound."""

    def __init__(self, dt_requested: float, dt_admissible: float):
        self.dt_requested = dt_requested
        self.dt_admissible = dt_admissible
        super().__init__(
            f"time step {dt_requested:.6g} s exceeds the admissible "
            f"{dt_admissible:.6g} s for the current field"
        )


class MaterialDomainError(NumericFailure):
    """Temperature left the domain of a property table."""


class ConvergenceError(NumericFailure):
    """An iterative solve did not converge within its budget."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (final residual {residual:.6g})")


class DegenerateDataError(CastcoolError):
    """Measurement data carries no information for a fit (exit code 4)."""
