"""Three-state clock error model: domain types and closed-form moments.

The clock error is the Gauss-Markov process (x1, x2, x3) driven by

    dx1 = (x2 + mu1) dt + sigma1 dW1        time deviation          [s]
    dx2 = (x3 + mu2) dt + sigma2 dW2        random-walk frequency   [-]
    dx3 =       mu3  dt + sigma3 dW3        frequency drift         [1/s]

with deterministic drives mu1..mu3 and diffusion coefficients sigma1..sigma3
(white FM, random-walk FM, and drift noise).  The solution at time t is
Normal; this module evaluates its mean and covariance in closed form, both
for the plain model and for three anomaly types layered on top of it:

* instantaneous jumps of a single component at scheduled epochs,
* a paired jump (equal and opposite frequency steps bracketing an interval),
* variance bursts (diffusions switch to sigma1p..sigma3p inside a window).

Jumps shift the mean only; the covariance is untouched.  Variance bursts do
the opposite and are handled by the simulator and analysis layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ScheduleError

__all__ = [
    "COMPONENTS",
    "ClockParameters",
    "InitialState",
    "ClockState",
    "InstantJump",
    "PairedJump",
    "VarianceWindow",
    "AnomalySchedule",
    "MomentPair",
    "heaviside_integral",
    "window_indicator",
    "analytic_mean",
    "analytic_covariance",
    "anomalous_mean",
]

#: Component names accepted by :class:`InstantJump`, in state order.
COMPONENTS = ("phase", "frequency", "drift")

_COMPONENT_AXIS = {name: axis for axis, name in enumerate(COMPONENTS)}


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ClockParameters:
    """Drives and diffusion coefficients of the three-state model.

    Parameters
    ----------
    mu1, mu2, mu3 : float
        Deterministic drives of the three components (s/s, 1/s, 1/s^2).
    sigma1, sigma2, sigma3 : float
        Diffusion coefficients: white-FM (s/sqrt(s)), random-walk FM
        (1/sqrt(s)), drift noise (1/(s*sqrt(s))).  All must be >= 0.
    sigma1p, sigma2p, sigma3p : float, optional
        Burst diffusions used inside a scheduled variance window.  Either
        all three are given or none.
    """

    mu1: float = 0.0
    mu2: float = 0.0
    mu3: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    sigma3: float = 0.0
    sigma1p: float | None = None
    sigma2p: float | None = None
    sigma3p: float | None = None

    def __post_init__(self):
        for name in ("mu1", "mu2", "mu3"):
            _require_finite(name, getattr(self, name))
        for name in ("sigma1", "sigma2", "sigma3"):
            value = _require_finite(name, getattr(self, name))
            if value < 0.0:
                raise DomainError(f"{name} must be >= 0, got {value!r}")
        burst = (self.sigma1p, self.sigma2p, self.sigma3p)
        given = [v is not None for v in burst]
        if any(given) and not all(given):
            raise DomainError(
                "burst diffusions sigma1p, sigma2p, sigma3p must be given together"
            )
        if all(given):
            for name in ("sigma1p", "sigma2p", "sigma3p"):
                value = _require_finite(name, getattr(self, name))
                if value < 0.0:
                    raise DomainError(f"{name} must be >= 0, got {value!r}")

    @property
    def sigmas(self) -> tuple[float, float, float]:
        return (self.sigma1, self.sigma2, self.sigma3)

    @property
    def burst_sigmas(self) -> tuple[float, float, float] | None:
        if self.sigma1p is None:
            return None
        return (self.sigma1p, self.sigma2p, self.sigma3p)

    @property
    def has_burst(self) -> bool:
        return self.sigma1p is not None


@dataclass(frozen=True)
class InitialState:
    """State at t = 0: phase deviation (s), frequency deviation, drift (1/s)."""

    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __post_init__(self):
        for name in ("c1", "c2", "c3"):
            _require_finite(name, getattr(self, name))

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3], dtype=float)


@dataclass(frozen=True)
class ClockState:
    """Clock error state at one grid epoch (t = epoch_index * tau)."""

    x1: float
    x2: float
    x3: float
    epoch_index: int
    t: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)


@dataclass(frozen=True)
class InstantJump:
    """Instantaneous jump of one component.

    ``component`` is one of ``"phase"``, ``"frequency"``, ``"drift"``;
    ``amplitude`` carries the units of that component and ``theta`` is the
    jump epoch in seconds.  The jump takes effect at its own epoch.
    """

    component: str
    amplitude: float
    theta: float

    def __post_init__(self):
        if self.component not in _COMPONENT_AXIS:
            raise DomainError(
                f"component must be one of {COMPONENTS}, got {self.component!r}"
            )
        _require_finite("amplitude", self.amplitude)
        theta = _require_finite("theta", self.theta)
        if theta < 0.0:
            raise DomainError(f"theta must be >= 0, got {theta!r}")

    @property
    def axis(self) -> int:
        return _COMPONENT_AXIS[self.component]


@dataclass(frozen=True)
class PairedJump:
    """Equal-and-opposite frequency jumps bracketing [theta0, theta1).

    The frequency steps up by ``a / (theta1 - theta0)`` at ``theta0`` and back
    down at ``theta1``, so the phase ramps linearly and accumulates exactly
    ``a`` seconds over the interval, holding it afterwards.
    """

    a: float
    theta0: float
    theta1: float

    def __post_init__(self):
        _require_finite("a", self.a)
        theta0 = _require_finite("theta0", self.theta0)
        theta1 = _require_finite("theta1", self.theta1)
        if theta0 < 0.0:
            raise DomainError(f"theta0 must be >= 0, got {theta0!r}")
        if theta1 <= theta0:
            raise DomainError(
                f"theta1 must exceed theta0, got [{theta0!r}, {theta1!r}]"
            )

    @property
    def delta(self) -> float:
        return self.theta1 - self.theta0

    @property
    def rate(self) -> float:
        """Frequency step amplitude a / delta."""
        return self.a / self.delta


@dataclass(frozen=True)
class VarianceWindow:
    """Interval [theta0, theta1] during which burst diffusions apply."""

    theta0: float
    theta1: float

    def __post_init__(self):
        theta0 = _require_finite("theta0", self.theta0)
        theta1 = _require_finite("theta1", self.theta1)
        if theta0 < 0.0:
            raise DomainError(f"theta0 must be >= 0, got {theta0!r}")
        if theta1 <= theta0:
            raise DomainError(
                f"theta1 must exceed theta0, got [{theta0!r}, {theta1!r}]"
            )


@dataclass(frozen=True)
class AnomalySchedule:
    """All anomalies of one scenario.  Empty lists give the plain model.

    Any number of deterministic jumps is allowed; their mean corrections
    superpose because the model is linear in the jump drivers.  Variance
    windows must not overlap each other (the burst diffusions would be
    ambiguous), including at shared endpoints.
    """

    instant_jumps: tuple[InstantJump, ...] = ()
    paired_jumps: tuple[PairedJump, ...] = ()
    variance_windows: tuple[VarianceWindow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instant_jumps", tuple(self.instant_jumps))
        object.__setattr__(self, "paired_jumps", tuple(self.paired_jumps))
        object.__setattr__(self, "variance_windows", tuple(self.variance_windows))
        windows = sorted(self.variance_windows, key=lambda w: w.theta0)
        for prev, cur in zip(windows, windows[1:]):
            if cur.theta0 <= prev.theta1:
                raise ScheduleError(
                    f"variance windows [{prev.theta0}, {prev.theta1}] and "
                    f"[{cur.theta0}, {cur.theta1}] overlap"
                )

    @classmethod
    def empty(cls) -> "AnomalySchedule":
        return cls()

    @property
    def is_empty(self) -> bool:
        return not (self.instant_jumps or self.paired_jumps or self.variance_windows)


@dataclass(frozen=True, eq=False)
class MomentPair:
    """Mean 3-vector and symmetric 3x3 covariance at one epoch."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.shape != (3,):
            raise DomainError(f"mean must have shape (3,), got {mean.shape}")
        if cov.shape != (3, 3):
            raise DomainError(f"covariance must have shape (3, 3), got {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def heaviside_integral(t: float, n: int) -> float:
    """n-fold iterated integral of the unit step, evaluated at ``t``.

    Returns ``t**n / n!`` for ``t >= 0`` and 0 otherwise; ``n = 0`` is the
    step itself.  The convention H(0) = 1 makes a jump take effect at its
    own epoch, matching the per-step jump rule of the iterative simulator.

    Parameters
    ----------
    t : float
        Evaluation point (seconds relative to the jump epoch).
    n : int
        Integration order, >= 0.
    """
    n = int(n)
    if n < 0:
        raise DomainError(f"order n must be >= 0, got {n}")
    if t < 0.0:
        return 0.0
    return float(t) ** n / math.factorial(n)


def window_indicator(t: float, a: float, b: float) -> float:
    """Indicator of the half-open interval [a, b): H(t - a) - H(t - b).

    Returns 1 for ``a <= t < b`` and 0 otherwise; the left endpoint is
    included by the H(0) = 1 convention, the right one excluded.
    """
    if b <= a:
        raise DomainError(f"invalid window: require b > a, got [{a!r}, {b!r})")
    return heaviside_integral(t - a, 0) - heaviside_integral(t - b, 0)


def _check_time(t: float) -> float:
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"t must be finite and >= 0, got {t!r}")
    return t


def analytic_mean(params: ClockParameters, init: InitialState, t: float) -> np.ndarray:
    """Mean of the anomaly-free model at time ``t``.

    The drift of the model integrates to the polynomial

        m1 = c1 + (c2 + mu1) t + (c3 + mu2) t^2/2 + mu3 t^3/6
        m2 = c2 + (c3 + mu2) t + mu3 t^2/2
        m3 = c3 + mu3 t

    Returns
    -------
    numpy.ndarray
        Mean state [m1, m2, m3], shape (3,).
    """
    t = _check_time(t)
    c1, c2, c3 = init.c1, init.c2, init.c3
    mu1, mu2, mu3 = params.mu1, params.mu2, params.mu3
    t2 = t * t
    t3 = t2 * t
    return np.array(
        [
            c1 + (c2 + mu1) * t + (c3 + mu2) * t2 / 2.0 + mu3 * t3 / 6.0,
            c2 + (c3 + mu2) * t + mu3 * t2 / 2.0,
            c3 + mu3 * t,
        ]
    )


def _covariance_poly(sigmas: tuple[float, float, float], t: float) -> np.ndarray:
    # Shared polynomial for the state covariance over an interval of length t.
    # innovation.innovation_covariance evaluates the same entries at t = tau;
    # keep the expression structure in lockstep so the two agree bitwise.
    v1 = sigmas[0] * sigmas[0]
    v2 = sigmas[1] * sigmas[1]
    v3 = sigmas[2] * sigmas[2]
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    s11 = v1 * t + v2 * t3 / 3.0 + v3 * t5 / 20.0
    s12 = v2 * t2 / 2.0 + v3 * t4 / 8.0
    s13 = v3 * t3 / 6.0
    s22 = v2 * t + v3 * t3 / 3.0
    s23 = v3 * t2 / 2.0
    s33 = v3 * t
    return np.array([[s11, s12, s13], [s12, s22, s23], [s13, s23, s33]])


def analytic_covariance(params: ClockParameters, t: float) -> np.ndarray:
    """Covariance of the model state at time ``t`` (exactly symmetric).

    Jump anomalies leave this matrix unchanged; only variance windows alter
    the spread, and those are handled empirically by the simulator.

    Returns
    -------
    numpy.ndarray
        Symmetric positive-semidefinite matrix, shape (3, 3).
    """
    t = _check_time(t)
    return _covariance_poly(params.sigmas, t)


def _instant_jump_column(jump: InstantJump, t: float) -> np.ndarray:
    # A jump on component i feeds the components below it through the chain
    # x3 -> x2 -> x1, so its mean correction is the amplitude times iterated
    # step integrals of decreasing order.
    a = jump.amplitude
    u = t - jump.theta
    if jump.component == "phase":
        return np.array([a * heaviside_integral(u, 0), 0.0, 0.0])
    if jump.component == "frequency":
        return np.array([a * heaviside_integral(u, 1), a * heaviside_integral(u, 0), 0.0])
    return np.array(
        [
            a * heaviside_integral(u, 2),
            a * heaviside_integral(u, 1),
            a * heaviside_integral(u, 0),
        ]
    )


def _paired_jump_column(jump: PairedJump, t: float) -> np.ndarray:
    # Inside the window the phase ramps at rate a/delta; after theta1 the
    # accumulated phase a is frozen in by the step term.
    rate = jump.rate
    inside = window_indicator(t, jump.theta0, jump.theta1)
    x1 = jump.a * heaviside_integral(t - jump.theta1, 0) + rate * (t - jump.theta0) * inside
    x2 = rate * inside
    return np.array([x1, x2, 0.0])


def anomalous_mean(
    params: ClockParameters,
    init: InitialState,
    schedule: AnomalySchedule,
    t: float,
) -> np.ndarray:
    """Mean of the model with scheduled jump anomalies at time ``t``.

    Equals :func:`analytic_mean` plus one additive correction column per
    scheduled jump; corrections superpose because the model is linear in the
    jump drivers.  Variance windows do not move the mean.  With an empty
    schedule the result is bit-for-bit the anomaly-free mean.
    """
    t = _check_time(t)
    base = analytic_mean(params, init, t)
    if not (schedule.instant_jumps or schedule.paired_jumps):
        return base
    correction = np.zeros(3)
    for jump in schedule.instant_jumps:
        correction += _instant_jump_column(jump, t)
    for paired in schedule.paired_jumps:
        correction += _paired_jump_column(paired, t)
    return base + correction
