"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`ClockforgeError` so callers
(and the CLI exit-code mapping) can tell deliberate diagnostics from bugs.
"""


class ClockforgeError(Exception):
    """Base class for all errors raised by clockforge."""


class DomainError(ClockforgeError, ValueError):
    """An argument lies outside a function's mathematical domain."""


class ShapeError(ClockforgeError, ValueError):
    """A matrix argument has the wrong shape or lacks required symmetry."""


class NotPositiveSemidefiniteError(ClockforgeError, ValueError):
    """A matrix that must be positive semidefinite has a negative pivot."""


class ScheduleError(ClockforgeError, ValueError):
    """An anomaly schedule violates its invariants."""


class MisalignedEpochError(ScheduleError):
    """An anomaly epoch does not lie on the sampling grid."""

    def __init__(self, theta: float, tau: float):
        self.theta = theta
        self.tau = tau
        super().__init__(
            f"anomaly epoch theta={theta!r} s is not on the sampling grid "
            f"(step tau={tau!r} s); epochs must be integer multiples of tau"
        )


class MisalignedTauError(ClockforgeError, ValueError):
    """An averaging time is not an integer multiple of the grid step."""


class InsufficientDataError(ClockforgeError, ValueError):
    """Too few paths or samples for the requested estimate."""


class UnsupportedAnalyticError(ClockforgeError):
    """No closed form is available; fall back to Monte Carlo estimation."""


class ConfigError(ClockforgeError):
    """A scenario configuration file is malformed."""
