"""Figure rendering for the CLI report paths.

Figures are built directly on :class:`matplotlib.figure.Figure`, never
through pyplot: no global state, no backend selection, and byte-stable
output for identical inputs.  Each function writes one PNG and returns its
path.
"""

from __future__ import annotations

from pathlib import Path

from matplotlib.figure import Figure

from .analysis import AllanEstimate, PredictionReport
from .simulate import Trajectory

__all__ = [
    "save_trajectory_figure",
    "save_prediction_figure",
    "save_allan_figure",
]

_COMPONENT_LABELS = (
    "time deviation x1 (s)",
    "frequency deviation x2",
    "frequency drift x3 (1/s)",
)


def save_trajectory_figure(out_path, trajectories, max_paths: int = 8) -> Path:
    """Stacked plot of x1, x2, x3 versus time for up to ``max_paths`` paths."""
    out_path = Path(out_path)
    shown = list(trajectories)[: max(int(max_paths), 1)]
    fig = Figure(figsize=(7.0, 6.5))
    axes = fig.subplots(3, 1, sharex=True)
    for axis, label in zip(axes, _COMPONENT_LABELS):
        axis.set_ylabel(label)
        axis.grid(True, alpha=0.3)
    for trajectory in shown:
        t = trajectory.times()
        axes[0].plot(t, trajectory.x1, linewidth=0.9)
        axes[1].plot(t, trajectory.x2, linewidth=0.9)
        axes[2].plot(t, trajectory.x3, linewidth=0.9)
    axes[2].set_xlabel("t (s)")
    axes[0].set_title(f"sample paths ({len(shown)} shown)")
    fig.tight_layout()
    fig.savefig(out_path)
    return out_path


def save_prediction_figure(out_path, reports, densities=None) -> Path:
    """Marginal densities of x1 with confidence bounds, one curve per epoch.

    ``densities`` pairs each report with (x, density) arrays; epochs with
    zero variance have no curve and fall back to an interval-only marker
    plot when nothing else is available.
    """
    out_path = Path(out_path)
    reports = list(reports)
    densities = list(densities or [])
    fig = Figure(figsize=(7.5, 4.8))
    axis = fig.subplots()
    if densities:
        for report, (x, y) in densities:
            (line,) = axis.plot(x, y, label=f"t = {report.t:g} s")
            color = line.get_color()
            for bound in report.interval:
                axis.axvline(bound, color=color, linestyle="--", linewidth=0.8)
        axis.set_xlabel("time deviation x1 (s)")
        axis.set_ylabel("probability density (1/s)")
        level = reports[0].confidence_level if reports else 0.95
        axis.set_title(
            f"x1 marginal density with {level:.0%} bounds (dashed)"
        )
        axis.legend()
    else:
        t = [r.t for r in reports]
        mean = [r.mean_x1 for r in reports]
        err = [r.half_width for r in reports]
        axis.errorbar(t, mean, yerr=err, fmt="o-", capsize=3)
        axis.set_xlabel("t (s)")
        axis.set_ylabel("time deviation x1 (s)")
        axis.set_title("predicted x1 with confidence interval")
    axis.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    return out_path


def save_allan_figure(out_path, estimate: AllanEstimate) -> Path:
    """Log-log Allan deviation versus averaging time."""
    out_path = Path(out_path)
    fig = Figure(figsize=(6.5, 4.8))
    axis = fig.subplots()
    positive = estimate.adev > 0.0
    if positive.any():
        axis.loglog(
            estimate.taus[positive], estimate.adev[positive], "o-", linewidth=1.0
        )
    else:
        axis.plot(estimate.taus, estimate.adev, "o-")
    axis.set_xlabel("averaging time tau (s)")
    axis.set_ylabel("Allan deviation")
    axis.set_title("overlapping Allan deviation")
    axis.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    return out_path
