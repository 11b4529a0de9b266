"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class SingWeylError(Exception):
    exit_code = 3


class ConfigError(SingWeylError):
    """Malformed configuration, model string or grid specification."""

    exit_code = 2


class NumericalError(SingWeylError):
    """A numerical routine failed (nonconvergence, step underflow, overflow)."""

    exit_code = 3


class PreconditionError(SingWeylError):
    """Inputs violate a documented precondition of the called operation."""

    exit_code = 4


class BesselOverflowError(NumericalError):
    """|Im w| too large for unscaled output; use the scaled variant."""


class StepUnderflowError(NumericalError):
    def __init__(self, msg, last_x):
        super().__init__(f"{msg} (last reached x={last_x:.6g})")
        self.last_x = last_x


class PoleError(NumericalError):
    """Evaluation point sits on (or numerically at) a pole."""


class NearPoleError(PoleError):
    """Ansatz denominator too small; shrink |Im z|."""
