"""Command-line front end.

Three subcommands over one scenario-config format:

* ``simulate`` writes per-path CSV trajectories and, for ensembles, a
  moments table comparing empirical against analytic mean/covariance.
* ``predict`` writes the analytic prediction report (and the marginal
  density samples of x1) for one or more horizons.
* ``allan`` simulates one path and writes its Allan deviation table.

Every run also renders matplotlib figures next to the CSV files unless
``--no-plot`` is given.  Exit codes are stable: 0 success, 1 usage or
config error, 2 schedule or numerical error.

All numbers are serialized with 17 significant digits, which round-trips
IEEE doubles exactly; re-parsing an output CSV reproduces the in-memory
values bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    allan_deviation,
    empirical_moments,
    marginal_density,
    prediction_report,
)
from .config import ScenarioConfig, load_config
from .errors import ClockforgeError, ConfigError
from .model import ClockParameters, analytic_covariance, anomalous_mean
from .simulate import simulate_ensemble, simulate_path, snap_schedule

__all__ = ["main", "run_simulate", "run_predict", "run_allan"]

#: Marginal density sampling: points per epoch, half-range in standard deviations.
DENSITY_POINTS = 512
DENSITY_SPAN = 5.0


def _fmt(value) -> str:
    # 17 significant digits: lossless for IEEE doubles.
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _note(path: Path) -> None:
    print(f"wrote {path}")


def _resolve_outputs(config: ScenarioConfig) -> tuple[str, ...]:
    if config.outputs is None:
        tokens = ["paths"]
        if config.n_paths >= 2:
            tokens.append("moments")
        tokens.append("density")
        return tuple(tokens)
    if "moments" in config.outputs and config.n_paths < 2:
        raise ConfigError("outputs includes moments but fewer than 2 paths are run")
    return config.outputs


def _stated_covariance(params: ClockParameters, schedule, t: float) -> np.ndarray:
    # Inside a burst window the quoted covariance switches to the burst
    # diffusions; outside it reverts to the nominal polynomial.  The
    # reversion understates spread accumulated during the window -- the
    # empirical columns beside these carry the observed truth.
    for window in schedule.variance_windows:
        if window.theta0 <= t <= window.theta1 and params.has_burst:
            primed = ClockParameters(
                mu1=params.mu1,
                mu2=params.mu2,
                mu3=params.mu3,
                sigma1=params.sigma1p,
                sigma2=params.sigma2p,
                sigma3=params.sigma3p,
            )
            return analytic_covariance(primed, t)
    return analytic_covariance(params, t)


_UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def run_simulate(
    config_path,
    out_dir,
    paths: int | None = None,
    seed: int | None = None,
    plot: bool = True,
) -> int:
    """Simulate the configured scenario and write its artifacts.

    Writes ``path_<id>.csv`` per path, ``ensemble_moments.csv`` for
    ensembles, and ``trajectories.png`` unless plotting is disabled.
    """
    config = load_config(config_path).with_overrides(n_paths=paths, seed=seed)
    outputs = _resolve_outputs(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # Snap anomaly epochs to exact grid floats so the analytic columns and
    # the simulated paths see the same jump times, ulp for ulp.
    schedule = snap_schedule(config.schedule, config.grid)
    ensemble = simulate_ensemble(
        config.params, config.init, schedule, config.grid, config.seed,
        config.n_paths,
    )
    times = ensemble.grid.times()

    if "paths" in outputs:
        for trajectory in ensemble.trajectories:
            rows = (
                (_fmt(times[k]), _fmt(row[0]), _fmt(row[1]), _fmt(row[2]))
                for k, row in enumerate(trajectory.xs)
            )
            _note(
                _write_csv(
                    out / f"path_{trajectory.path_id}.csv",
                    ("t", "x1", "x2", "x3"),
                    rows,
                )
            )

    if "moments" in outputs and config.n_paths >= 2:
        header = (
            ("t",)
            + tuple(f"emp_mean_x{i}" for i in (1, 2, 3))
            + tuple(f"ana_mean_x{i}" for i in (1, 2, 3))
            + tuple(f"emp_cov_{i + 1}{j + 1}" for i, j in _UPPER)
            + tuple(f"ana_cov_{i + 1}{j + 1}" for i, j in _UPPER)
        )
        rows = []
        for k in range(ensemble.grid.n_epochs):
            t = float(times[k])
            moments = empirical_moments(ensemble, k)
            ana_mean = anomalous_mean(config.params, config.init, schedule, t)
            ana_cov = _stated_covariance(config.params, schedule, t)
            rows.append(
                (_fmt(t),)
                + tuple(_fmt(v) for v in moments.mean)
                + tuple(_fmt(v) for v in ana_mean)
                + tuple(_fmt(moments.covariance[i, j]) for i, j in _UPPER)
                + tuple(_fmt(ana_cov[i, j]) for i, j in _UPPER)
            )
        _note(_write_csv(out / "ensemble_moments.csv", header, rows))

    if plot:
        from . import plots

        _note(plots.save_trajectory_figure(out / "trajectories.png", ensemble.trajectories))
    return 0


def run_predict(
    config_path,
    out_dir,
    t_values=None,
    level: float = 0.95,
    plot: bool = True,
) -> int:
    """Write the analytic prediction report for one or more horizons.

    Produces ``prediction.csv`` (one row per horizon), ``density.csv``
    sampling the x1 marginal on mean +/- 5 std (epochs with zero variance
    are skipped with a note), and ``prediction.png``.
    """
    config = load_config(config_path)
    if not 0.0 < float(level) < 1.0:
        raise ConfigError(f"--level must be in (0, 1), got {level!r}")
    outputs = _resolve_outputs(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    horizons = tuple(float(t) for t in (t_values or (config.grid.horizon,)))

    reports = [
        prediction_report(config.params, config.init, config.schedule, t, level)
        for t in horizons
    ]
    rows = (
        (
            _fmt(r.t),
            _fmt(r.mean_x1),
            _fmt(r.std_x1),
            _fmt(r.interval[0]),
            _fmt(r.interval[1]),
            _fmt(r.confidence_level),
        )
        for r in reports
    )
    _note(
        _write_csv(
            out / "prediction.csv",
            ("t", "mean_x1", "std_x1", "lo", "hi", "level"),
            rows,
        )
    )

    densities = []
    if "density" in outputs:
        rows = []
        for report in reports:
            if report.std_x1 <= 0.0:
                print(
                    f"note: density skipped at t={report.t:g} s (zero variance)",
                    file=sys.stderr,
                )
                continue
            x = np.linspace(
                report.mean_x1 - DENSITY_SPAN * report.std_x1,
                report.mean_x1 + DENSITY_SPAN * report.std_x1,
                DENSITY_POINTS,
            )
            variance = report.std_x1 * report.std_x1
            y = np.array([marginal_density(report.mean_x1, variance, xi) for xi in x])
            densities.append((report, (x, y)))
            rows.extend(
                (_fmt(report.t), _fmt(xi), _fmt(yi)) for xi, yi in zip(x, y)
            )
        if rows:
            _note(_write_csv(out / "density.csv", ("t", "x", "density"), rows))

    for report in reports:
        print(
            f"t={report.t:g} s: x1 = {report.mean_x1:.6g} s +/- "
            f"{report.half_width:.4g} s "
            f"({report.confidence_level:.0%} confidence; {report.schedule_summary})"
        )

    if plot:
        from . import plots

        _note(plots.save_prediction_figure(out / "prediction.png", reports, densities))
    return 0


def run_allan(
    config_path,
    out_dir,
    taus=None,
    seed: int | None = None,
    plot: bool = True,
) -> int:
    """Simulate one path of the scenario and write its Allan deviation.

    Default averaging times double from the grid step for as long as the
    path supports them; ``--tau`` overrides with an explicit list.
    """
    config = load_config(config_path).with_overrides(seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schedule = snap_schedule(config.schedule, config.grid)
    trajectory = simulate_path(
        config.params, config.init, schedule, config.grid, config.seed, path_id=0
    )

    if taus is None:
        grid_tau = config.grid.tau
        m = 1
        taus = []
        while 2 * m + 1 <= config.grid.n_epochs:
            taus.append(m * grid_tau)
            m *= 2
        if not taus:
            raise ConfigError(
                f"grid has only {config.grid.n_epochs} epochs; too short for "
                f"any Allan estimate"
            )
    estimate = allan_deviation(trajectory, taus)

    rows = (
        (_fmt(tau), _fmt(adev), str(int(n)))
        for tau, adev, n in zip(
            estimate.taus, estimate.adev, estimate.n_samples_per_tau
        )
    )
    _note(_write_csv(out / "allan.csv", ("tau", "adev", "n"), rows))

    if plot:
        from . import plots

        _note(plots.save_allan_figure(out / "allan.png", estimate))
    return 0


class _Parser(argparse.ArgumentParser):
    # The exit-code contract reserves 2 for numerical/schedule errors, so
    # usage mistakes exit 1 instead of argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(token) for token in raw.split(",") if token.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {raw!r}"
        ) from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="clockforge",
        description=(
            "Three-state clock error simulator: exact sample paths with "
            "jump and variance-burst anomalies, analytic prediction "
            "intervals, and Allan deviation estimates."
        ),
    )
    commands = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser
    )

    simulate = commands.add_parser(
        "simulate", help="simulate sample paths and write CSV trajectories"
    )
    simulate.add_argument("--config", required=True, help="scenario config file")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.add_argument(
        "--paths", type=int, default=None, help="override [run] paths"
    )
    simulate.add_argument(
        "--seed", type=int, default=None, help="override [run] seed"
    )
    simulate.add_argument(
        "--no-plot", action="store_true", help="skip figure rendering"
    )
    simulate.set_defaults(handler=_cmd_simulate)

    predict = commands.add_parser(
        "predict", help="write the analytic prediction report for horizons"
    )
    predict.add_argument("--config", required=True, help="scenario config file")
    predict.add_argument("--out", required=True, help="output directory")
    predict.add_argument(
        "--t",
        type=_float_list,
        default=None,
        help="comma-separated horizons in s (default: grid horizon)",
    )
    predict.add_argument(
        "--level", type=float, default=0.95, help="confidence level in (0, 1)"
    )
    predict.add_argument(
        "--no-plot", action="store_true", help="skip figure rendering"
    )
    predict.set_defaults(handler=_cmd_predict)

    allan = commands.add_parser(
        "allan", help="simulate one path and write its Allan deviation"
    )
    allan.add_argument("--config", required=True, help="scenario config file")
    allan.add_argument("--out", required=True, help="output directory")
    allan.add_argument(
        "--tau",
        type=_float_list,
        default=None,
        help="comma-separated averaging times in s (default: doubling sweep)",
    )
    allan.add_argument(
        "--seed", type=int, default=None, help="override [run] seed"
    )
    allan.add_argument(
        "--no-plot", action="store_true", help="skip figure rendering"
    )
    allan.set_defaults(handler=_cmd_allan)
    return parser


def _cmd_simulate(args) -> int:
    return run_simulate(
        args.config, args.out, paths=args.paths, seed=args.seed,
        plot=not args.no_plot,
    )


def _cmd_predict(args) -> int:
    return run_predict(
        args.config, args.out, t_values=args.t, level=args.level,
        plot=not args.no_plot,
    )


def _cmd_allan(args) -> int:
    return run_allan(
        args.config, args.out, taus=args.tau, seed=args.seed,
        plot=not args.no_plot,
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"clockforge: error: {exc}", file=sys.stderr)
        return 1
    except ClockforgeError as exc:
        print(f"clockforge: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
