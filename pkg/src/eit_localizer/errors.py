"""Exception hierarchy.

Every exception carries a short ``category`` string that the command line
reports on failure so callers can branch on it without parsing messages.
"""


class EITError(Exception):
    category = "error"


class DegenerateDriveError(EITError, ValueError):
    """Both Rabi frequencies vanish, so the mixing angles are undefined."""

    category = "degenerate-drive"


class ContractViolation(EITError, ValueError):
    category = "contract"


class StepSizeError(EITError, ValueError):
    category = "step-size"

    def __init__(self, dt, rate, name):
        self.dt = dt
        self.rate = rate
        self.name = name
        super().__init__(
            f"dt={dt:.3g} too large for rate {name}={rate:.3g}: "
            f"dt*rate={dt * rate:.3g} exceeds 0.1"
        )


class TraceDriftError(EITError, RuntimeError):
    category = "trace-drift"


class ScheduleError(EITError, ValueError):
    category = "schedule"


class GridError(EITError, ValueError):
    """Scan grid too short or too coarse for the requested operation."""

    category = "grid"


class ConfigError(EITError, ValueError):
    category = "config"

    def __init__(self, key, constraint):
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")
