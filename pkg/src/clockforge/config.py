"""Scenario configuration files.

A scenario is an INI file with fixed sections:

    [params]   mu1..mu3, sigma1..sigma3, optional burst trio sigma1p..sigma3p
    [init]     c1, c2, c3
    [grid]     tau, and exactly one of n_steps | horizon
    [run]      seed, paths, optional outputs list (paths, moments, density)

plus any number of anomaly sections named ``[instant_jump.<label>]``,
``[paired_jump.<label>]``, ``[variance_window.<label>]`` (the ``.<label>``
suffix is optional when there is only one of a kind).  All epochs are in
seconds; they are resolved to grid indices when the scenario runs.

Malformed structure or values raise :class:`ConfigError` naming the section
and key.  Schedule-level problems (epochs off the grid, overlapping
windows) keep their own error types: they are modelling errors, not file
syntax, and the CLI reports them under a different exit code.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError, DomainError
from .model import (
    AnomalySchedule,
    ClockParameters,
    InitialState,
    InstantJump,
    PairedJump,
    VarianceWindow,
)
from .simulate import SimulationGrid, validate_schedule

__all__ = ["ScenarioConfig", "load_config", "OUTPUT_TOKENS"]

#: Artifacts a config may request under [run] outputs.
OUTPUT_TOKENS = ("paths", "moments", "density")

_SECTION_KEYS = {
    "params": {
        "mu1", "mu2", "mu3",
        "sigma1", "sigma2", "sigma3",
        "sigma1p", "sigma2p", "sigma3p",
    },
    "init": {"c1", "c2", "c3"},
    "grid": {"tau", "n_steps", "horizon"},
    "run": {"seed", "paths", "outputs"},
    "instant_jump": {"component", "amplitude", "theta"},
    "paired_jump": {"a", "theta0", "theta1"},
    "variance_window": {"theta0", "theta1"},
}

_ANOMALY_KINDS = ("instant_jump", "paired_jump", "variance_window")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one run needs: model, grid, schedule, and run controls.

    ``outputs`` is the explicit artifact list from the file, or None for
    automatic selection (all artifacts applicable to the command and path
    count).
    """

    params: ClockParameters
    init: InitialState
    grid: SimulationGrid
    schedule: AnomalySchedule
    n_paths: int
    seed: int
    outputs: tuple[str, ...] | None = None

    def with_overrides(
        self, n_paths: int | None = None, seed: int | None = None
    ) -> "ScenarioConfig":
        updated = self
        if n_paths is not None:
            if int(n_paths) < 1:
                raise ConfigError(f"paths must be >= 1, got {n_paths}")
            updated = replace(updated, n_paths=int(n_paths))
        if seed is not None:
            updated = replace(updated, seed=_check_seed(int(seed)))
        return updated


def _check_seed(seed: int) -> int:
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _section_kind(name: str) -> str:
    return name.split(".", 1)[0]


def _check_keys(section: str, present, kind: str) -> None:
    unknown = sorted(set(present) - _SECTION_KEYS[kind])
    if unknown:
        raise ConfigError(
            f"section [{section}]: unknown key(s) {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(_SECTION_KEYS[kind]))}"
        )


_REQUIRED = object()


def _get_float(parser, section: str, key: str, default=_REQUIRED) -> float | None:
    if not parser.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"section [{section}]: missing required key {key}")
        return default
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"section [{section}] key {key}: expected a number, got {raw!r}"
        ) from None


def _get_int(parser, section: str, key: str, default: int) -> int:
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"section [{section}] key {key}: expected an integer, got {raw!r}"
        ) from None


def _build(section: str, factory, **kwargs):
    # Field-level value errors from the domain constructors become config
    # errors carrying the section name; schedule errors pass through.
    try:
        return factory(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"section [{section}]: {exc}") from None


def _parse_grid(parser) -> SimulationGrid:
    if not parser.has_section("grid"):
        raise ConfigError("missing required section [grid]")
    _check_keys("grid", parser.options("grid"), "grid")
    tau = _get_float(parser, "grid", "tau")
    n_steps = parser.get("grid", "n_steps", fallback=None)
    horizon = parser.get("grid", "horizon", fallback=None)
    if (n_steps is None) == (horizon is None):
        raise ConfigError(
            "section [grid]: give exactly one of n_steps or horizon"
        )
    if n_steps is not None:
        try:
            steps = int(n_steps)
        except ValueError:
            raise ConfigError(
                f"section [grid] key n_steps: expected an integer, got {n_steps!r}"
            ) from None
    else:
        try:
            span = float(horizon)
        except ValueError:
            raise ConfigError(
                f"section [grid] key horizon: expected a number, got {horizon!r}"
            ) from None
        if tau is None or tau <= 0:
            raise ConfigError("section [grid]: tau must be > 0")
        steps = int(round(span / tau))
        if steps < 1 or abs(span - steps * tau) > 1e-9 * tau:
            raise ConfigError(
                f"section [grid]: horizon {span!r} is not a positive integer "
                f"multiple of tau {tau!r}"
            )
    return _build("grid", SimulationGrid, tau=tau, n_steps=steps)


def _parse_outputs(parser) -> tuple[str, ...] | None:
    if not parser.has_option("run", "outputs"):
        return None
    raw = parser.get("run", "outputs")
    tokens = tuple(t.strip().lower() for t in raw.split(",") if t.strip())
    if not tokens:
        raise ConfigError(
            "section [run] key outputs: must name at least one artifact"
        )
    unknown = sorted(set(tokens) - set(OUTPUT_TOKENS))
    if unknown:
        raise ConfigError(
            f"section [run] key outputs: unknown artifact(s) "
            f"{', '.join(unknown)}; allowed: {', '.join(OUTPUT_TOKENS)}"
        )
    return tokens


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file.

    Raises
    ------
    ConfigError
        On unreadable files, unknown sections or keys, bad values, or a
        burst/window mismatch (burst diffusions and variance windows must
        be configured together).
    MisalignedEpochError, ScheduleError
        From schedule validation against the configured grid.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(path.read_text(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    for section in parser.sections():
        kind = _section_kind(section)
        if kind not in _SECTION_KEYS:
            raise ConfigError(
                f"unknown section [{section}]; allowed: [params], [init], "
                f"[grid], [run], [instant_jump.*], [paired_jump.*], "
                f"[variance_window.*]"
            )
        if kind in _ANOMALY_KINDS or section == kind:
            _check_keys(section, parser.options(section), kind)
        else:
            raise ConfigError(
                f"unknown section [{section}]; [{kind}] takes no suffix"
            )

    burst_keys = ("sigma1p", "sigma2p", "sigma3p")
    kwargs = {}
    if parser.has_section("params"):
        for key in sorted(_SECTION_KEYS["params"]):
            value = _get_float(parser, "params", key, default=None)
            if value is not None:
                kwargs[key] = value
            elif key not in burst_keys:
                kwargs[key] = 0.0
    params = _build("params", ClockParameters, **kwargs)

    init_kwargs = {}
    if parser.has_section("init"):
        for key in sorted(_SECTION_KEYS["init"]):
            init_kwargs[key] = _get_float(parser, "init", key, default=0.0)
    init = _build("init", InitialState, **init_kwargs)

    grid = _parse_grid(parser)

    instant = []
    paired = []
    windows = []
    for section in parser.sections():
        kind = _section_kind(section)
        if kind == "instant_jump":
            component = parser.get(section, "component", fallback=None)
            if component is None:
                raise ConfigError(
                    f"section [{section}]: missing required key component"
                )
            instant.append(
                _build(
                    section,
                    InstantJump,
                    component=component.strip().lower(),
                    amplitude=_get_float(parser, section, "amplitude"),
                    theta=_get_float(parser, section, "theta"),
                )
            )
        elif kind == "paired_jump":
            paired.append(
                _build(
                    section,
                    PairedJump,
                    a=_get_float(parser, section, "a"),
                    theta0=_get_float(parser, section, "theta0"),
                    theta1=_get_float(parser, section, "theta1"),
                )
            )
        elif kind == "variance_window":
            windows.append(
                _build(
                    section,
                    VarianceWindow,
                    theta0=_get_float(parser, section, "theta0"),
                    theta1=_get_float(parser, section, "theta1"),
                )
            )
    schedule = AnomalySchedule(
        instant_jumps=tuple(instant),
        paired_jumps=tuple(paired),
        variance_windows=tuple(windows),
    )

    # Burst diffusions and variance windows only make sense together; catch
    # the mismatch here, where the whole scenario is visible.
    if schedule.variance_windows and not params.has_burst:
        raise ConfigError(
            "a [variance_window] section requires sigma1p, sigma2p, sigma3p "
            "under [params]"
        )
    if params.has_burst and not schedule.variance_windows:
        raise ConfigError(
            "sigma1p, sigma2p, sigma3p are set but no [variance_window] "
            "section is present"
        )

    seed = 0
    n_paths = 1
    outputs = None
    if parser.has_section("run"):
        seed = _check_seed(_get_int(parser, "run", "seed", 0))
        n_paths = _get_int(parser, "run", "paths", 1)
        if n_paths < 1:
            raise ConfigError(f"section [run] key paths: must be >= 1, got {n_paths}")
        outputs = _parse_outputs(parser)
    if outputs is not None and "moments" in outputs and n_paths < 2:
        raise ConfigError(
            "section [run]: outputs includes moments but paths < 2"
        )

    validate_schedule(schedule, grid)
    return ScenarioConfig(
        params=params,
        init=init,
        grid=grid,
        schedule=schedule,
        n_paths=n_paths,
        seed=seed,
        outputs=outputs,
    )
