"""Prediction intervals, marginal densities, moments, and Allan deviation.

Everything here is a pure function over immutable inputs.  The prediction
path is fully analytic and only valid while no variance burst has occurred;
once a burst window enters the horizon the covariance has no closed form
and callers are pointed at Monte Carlo estimation instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import (
    DomainError,
    InsufficientDataError,
    MisalignedTauError,
    UnsupportedAnalyticError,
)
from .model import (
    AnomalySchedule,
    ClockParameters,
    InitialState,
    MomentPair,
    analytic_covariance,
    anomalous_mean,
)
from .simulate import EPOCH_RTOL, Ensemble, Trajectory

__all__ = [
    "PredictionReport",
    "AllanEstimate",
    "z_quantile",
    "marginal_density",
    "prediction_report",
    "empirical_moments",
    "allan_deviation",
    "summarize_schedule",
]

# Conventional z-values; 0.68 deliberately maps to the one-sigma value 1.0
# rather than the exact quantile 0.9945, and 0.95 to the customary 1.96.
_Z_TABLE = {0.68: 1.0, 0.95: 1.96, 0.99: 2.576}


def z_quantile(level: float) -> float:
    """Two-sided Normal quantile z with P(|Z| <= z) = level.

    Levels 0.68, 0.95, 0.99 return the conventional rounded values (1.0,
    1.96, 2.576); any other level in (0, 1) is computed from the inverse
    Normal CDF, accurate to well below 1e-8.
    """
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must be in (0, 1), got {level!r}")
    try:
        return _Z_TABLE[level]
    except KeyError:
        return NormalDist().inv_cdf((1.0 + level) / 2.0)


def marginal_density(mean: float, variance: float, x: float) -> float:
    """Normal pdf with the given mean and variance, evaluated at x.

    Raises
    ------
    DomainError
        If variance <= 0; a degenerate marginal has no density.
    """
    variance = float(variance)
    if not math.isfinite(variance) or variance <= 0.0:
        raise DomainError(f"variance must be > 0, got {variance!r}")
    u = float(x) - float(mean)
    return math.exp(-u * u / (2.0 * variance)) / math.sqrt(2.0 * math.pi * variance)


def summarize_schedule(schedule: AnomalySchedule) -> str:
    """One-line human-readable description of a schedule."""
    if schedule.is_empty:
        return "no anomalies"
    parts = []
    for jump in schedule.instant_jumps:
        parts.append(f"{jump.component} jump a={jump.amplitude:g} at t={jump.theta:g} s")
    for jump in schedule.paired_jumps:
        parts.append(
            f"paired frequency jump a={jump.a:g} s over [{jump.theta0:g}, {jump.theta1:g}] s"
        )
    for window in schedule.variance_windows:
        parts.append(f"variance burst on [{window.theta0:g}, {window.theta1:g}] s")
    return "; ".join(parts)


@dataclass(frozen=True)
class PredictionReport:
    """Analytic mean, spread, and confidence interval of x1 at one epoch."""

    t: float
    mean_x1: float
    std_x1: float
    confidence_level: float
    interval: tuple[float, float]
    schedule_summary: str

    @property
    def half_width(self) -> float:
        return (self.interval[1] - self.interval[0]) / 2.0


def prediction_report(
    params: ClockParameters,
    init: InitialState,
    schedule: AnomalySchedule,
    t: float,
    level: float = 0.95,
) -> PredictionReport:
    """Prediction error of the time deviation at horizon ``t``.

    The report interval is mean_x1 +/- z(level) * sqrt(var_x1), with the
    mean including all scheduled jumps.  Jumps never widen the interval;
    they shift it, which is exactly what makes an undetected jump eat the
    error budget of a prediction.

    Raises
    ------
    UnsupportedAnalyticError
        If a variance window starts at or before ``t``: the post-burst
        covariance has no closed form here, so estimate it from an
        ensemble via :func:`empirical_moments` instead.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise DomainError(f"t must be finite and >= 0, got {t!r}")
    z = z_quantile(level)
    for window in schedule.variance_windows:
        if window.theta0 <= t:
            raise UnsupportedAnalyticError(
                f"variance window [{window.theta0:g}, {window.theta1:g}] s "
                f"intersects [0, {t:g}] s; no analytic covariance applies. "
                f"Run a Monte Carlo ensemble and use empirical_moments."
            )
    mean_x1 = float(anomalous_mean(params, init, schedule, t)[0])
    std_x1 = math.sqrt(float(analytic_covariance(params, t)[0, 0]))
    lo = mean_x1 - z * std_x1
    hi = mean_x1 + z * std_x1
    return PredictionReport(
        t=t,
        mean_x1=mean_x1,
        std_x1=std_x1,
        confidence_level=float(level),
        interval=(lo, hi),
        schedule_summary=summarize_schedule(schedule),
    )


def empirical_moments(ensemble: Ensemble, epoch_index: int) -> MomentPair:
    """Sample mean and unbiased covariance across paths at one epoch.

    Raises
    ------
    InsufficientDataError
        If the ensemble holds fewer than 2 paths (no unbiased covariance).
    """
    if ensemble.n_paths < 2:
        raise InsufficientDataError(
            f"need at least 2 paths for sample moments, got {ensemble.n_paths}"
        )
    epoch_index = int(epoch_index)
    if epoch_index < 0:
        epoch_index += ensemble.grid.n_epochs
    if not 0 <= epoch_index < ensemble.grid.n_epochs:
        raise IndexError(f"epoch index {epoch_index} out of range")
    samples = ensemble.xs[:, epoch_index, :]
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False, ddof=1)
    return MomentPair(mean=mean, covariance=cov)


@dataclass(frozen=True, eq=False)
class AllanEstimate:
    """Overlapping Allan deviation estimates at a set of averaging times."""

    taus: np.ndarray
    adev: np.ndarray
    n_samples_per_tau: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        adev = np.asarray(self.adev, dtype=float)
        counts = np.asarray(self.n_samples_per_tau, dtype=int)
        if not taus.shape == adev.shape == counts.shape or taus.ndim != 1:
            raise DomainError("taus, adev, n_samples_per_tau must be 1-d and aligned")
        if np.any(adev < 0.0):
            raise DomainError("adev must be >= 0")
        for arr in (taus, adev, counts):
            arr.setflags(write=False)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "adev", adev)
        object.__setattr__(self, "n_samples_per_tau", counts)


def allan_deviation(trajectory: Trajectory, taus) -> AllanEstimate:
    """Overlapping Allan deviation of the time deviation samples.

    For each averaging time tau = m * tau0 the estimator is

        adev(tau)^2 = < (x1[k+2m] - 2 x1[k+m] + x1[k])^2 > / (2 tau^2)

    averaged over all n_epochs - 2m overlapping windows.  Second differences
    of a linear phase ramp vanish, so a perfect frequency offset contributes
    nothing, as it must.

    Raises
    ------
    MisalignedTauError
        If some tau is not an integer multiple of the grid step.
    InsufficientDataError
        If the trajectory is too short for some tau (needs 2m + 1 points).
    """
    tau0 = trajectory.grid.tau
    x1 = trajectory.x1
    out_taus = []
    out_adev = []
    out_n = []
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        m = int(round(tau / tau0))
        if m < 1 or abs(tau - m * tau0) > EPOCH_RTOL * tau0:
            raise MisalignedTauError(
                f"tau={tau!r} s is not a positive integer multiple of the "
                f"grid step {tau0!r} s"
            )
        if x1.size < 2 * m + 1:
            raise InsufficientDataError(
                f"trajectory has {x1.size} epochs; tau={tau!r} s needs at "
                f"least {2 * m + 1}"
            )
        d = x1[2 * m :] - 2.0 * x1[m : -m] + x1[: -2 * m]
        tau_eff = m * tau0
        avar = float(np.mean(d * d)) / (2.0 * tau_eff * tau_eff)
        out_taus.append(tau_eff)
        out_adev.append(math.sqrt(avar))
        out_n.append(d.size)
    return AllanEstimate(
        taus=np.array(out_taus),
        adev=np.array(out_adev),
        n_samples_per_tau=np.array(out_n, dtype=int),
    )
