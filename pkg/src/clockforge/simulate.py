"""Exact sample-path simulation on a uniform grid.

The model's one-step transition is known in closed form, so paths generated
here carry no discretization error at any step size: the state at epoch k+1
is the polynomial advance of the state at epoch k, plus an exact Gaussian
innovation, plus any jump scheduled at that epoch.  Anomaly epochs are
resolved to integer grid indices once, up front, so per-step membership
tests compare integers, never floats.

Each path draws its noise from a counter-based substream keyed on
(seed, path_id).  An ensemble is therefore a pure function of (seed,
n_paths): chunked or threaded execution, or any reordering of paths,
returns bitwise-identical arrays.  The scalar single-path loop and the
vectorized multi-path loop share the same advance kernel and the same
factor application, so they agree bitwise as well.
"""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ScheduleError, ShapeError
from .innovation import InnovationModel, _apply_factor
from .model import (
    AnomalySchedule,
    ClockParameters,
    ClockState,
    InitialState,
    InstantJump,
    PairedJump,
    VarianceWindow,
)

__all__ = [
    "SimulationGrid",
    "NormalizedSchedule",
    "Trajectory",
    "Ensemble",
    "validate_schedule",
    "snap_schedule",
    "step",
    "simulate_path",
    "simulate_ensemble",
]

#: Relative alignment tolerance: |theta - k*tau| <= EPOCH_RTOL * tau.
EPOCH_RTOL = 1e-9

#: Paths per unit of work when simulating ensembles.  Chunking is purely an
#: execution detail; results never depend on it.
CHUNK_PATHS = 1024

#: Environment variable capping ensemble parallelism (0 = auto, unset = 1).
THREADS_ENV = "CLOCKFORGE_THREADS"


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform sampling grid t_k = k * tau, k = 0..n_steps."""

    tau: float
    n_steps: int

    def __post_init__(self):
        tau = float(self.tau)
        if not math.isfinite(tau) or tau <= 0.0:
            raise DomainError(f"tau must be finite and > 0, got {self.tau!r}")
        n_steps = int(self.n_steps)
        if n_steps < 1:
            raise DomainError(f"n_steps must be >= 1, got {self.n_steps!r}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "n_steps", n_steps)

    @property
    def n_epochs(self) -> int:
        return self.n_steps + 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.tau

    def times(self) -> np.ndarray:
        """Epoch times [0, tau, ..., n_steps*tau], shape (n_epochs,)."""
        return np.arange(self.n_epochs) * self.tau

    def index_of(self, theta: float) -> int:
        """Grid index k with |theta - k*tau| <= 1e-9*tau.

        Raises
        ------
        MisalignedEpochError
            If no such k exists.  Epochs are never silently snapped.
        """
        from .errors import MisalignedEpochError

        theta = float(theta)
        k = int(round(theta / self.tau))
        if abs(theta - k * self.tau) > EPOCH_RTOL * self.tau:
            raise MisalignedEpochError(theta, self.tau)
        return k


@dataclass(frozen=True)
class NormalizedSchedule:
    """Anomaly schedule with every epoch resolved to a grid index.

    ``instant`` holds (index, axis, amplitude) triples; ``paired`` holds
    (start, stop, rate) with rate = a / (theta1 - theta0) applied +/- to the
    frequency component; ``windows`` holds closed index intervals during
    which the burst innovation covariance applies.
    """

    n_steps: int
    instant: tuple[tuple[int, int, float], ...] = ()
    paired: tuple[tuple[int, int, float], ...] = ()
    windows: tuple[tuple[int, int], ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.instant or self.paired or self.windows)

    @property
    def has_windows(self) -> bool:
        return bool(self.windows)

    def jump_table(self) -> dict[int, tuple[float, float, float]]:
        """Map epoch index -> summed jump vector for that epoch.

        Simultaneous anomalies add; the paired jump contributes +rate to the
        frequency component at its start index and -rate at its stop index.
        """
        table: dict[int, list[float]] = {}
        for index, axis, amplitude in self.instant:
            entry = table.setdefault(index, [0.0, 0.0, 0.0])
            entry[axis] += amplitude
        for start, stop, rate in self.paired:
            entry = table.setdefault(start, [0.0, 0.0, 0.0])
            entry[1] += rate
            entry = table.setdefault(stop, [0.0, 0.0, 0.0])
            entry[1] -= rate
        return {index: (e[0], e[1], e[2]) for index, e in table.items()}

    def burst_mask(self) -> np.ndarray:
        """Boolean mask over steps: True where the step draws from Q'.

        Step k carries the state from epoch k to k+1 and uses the burst
        covariance iff epoch k+1 lies inside a closed window [start, stop].
        """
        mask = np.zeros(self.n_steps, dtype=bool)
        for start, stop in self.windows:
            mask[max(start - 1, 0) : stop] = True
        return mask


def _grid_index(grid: SimulationGrid, theta: float) -> int:
    k = grid.index_of(theta)
    if k > grid.n_steps:
        raise ScheduleError(
            f"anomaly epoch theta={theta!r} s (index {k}) lies beyond the "
            f"grid horizon {grid.horizon!r} s"
        )
    return k


def validate_schedule(
    schedule: AnomalySchedule, grid: SimulationGrid
) -> NormalizedSchedule:
    """Resolve every anomaly epoch to its grid index, or fail loudly.

    Raises
    ------
    MisalignedEpochError
        If some theta is not within 1e-9*tau of a grid epoch.
    ScheduleError
        If an epoch lies beyond the grid horizon, or a paired jump or
        variance window collapses to a single index.
    """
    instant = tuple(
        (_grid_index(grid, jump.theta), jump.axis, float(jump.amplitude))
        for jump in schedule.instant_jumps
    )
    paired = []
    for jump in schedule.paired_jumps:
        start = _grid_index(grid, jump.theta0)
        stop = _grid_index(grid, jump.theta1)
        if stop <= start:
            raise ScheduleError(
                f"paired jump [{jump.theta0!r}, {jump.theta1!r}] collapses to "
                f"one grid index at tau={grid.tau!r}"
            )
        paired.append((start, stop, jump.rate))
    windows = []
    for window in schedule.variance_windows:
        start = _grid_index(grid, window.theta0)
        stop = _grid_index(grid, window.theta1)
        if stop <= start:
            raise ScheduleError(
                f"variance window [{window.theta0!r}, {window.theta1!r}] "
                f"collapses to one grid index at tau={grid.tau!r}"
            )
        windows.append((start, stop))
    return NormalizedSchedule(
        n_steps=grid.n_steps,
        instant=instant,
        paired=tuple(paired),
        windows=tuple(windows),
    )


def snap_schedule(schedule: AnomalySchedule, grid: SimulationGrid) -> AnomalySchedule:
    """Rebuild a schedule with each epoch replaced by its exact grid time.

    Validation is the same as :func:`validate_schedule`; the returned
    schedule has every theta bitwise equal to index*tau.  Use this before
    comparing closed-form means against simulated paths: it removes the
    last-ulp cases where a grid time falls on the wrong side of a step
    function evaluated at the configured theta.
    """
    instant = tuple(
        InstantJump(
            component=jump.component,
            amplitude=jump.amplitude,
            theta=_grid_index(grid, jump.theta) * grid.tau,
        )
        for jump in schedule.instant_jumps
    )
    paired = tuple(
        PairedJump(
            a=jump.a,
            theta0=_grid_index(grid, jump.theta0) * grid.tau,
            theta1=_grid_index(grid, jump.theta1) * grid.tau,
        )
        for jump in schedule.paired_jumps
    )
    windows = tuple(
        VarianceWindow(
            theta0=_grid_index(grid, window.theta0) * grid.tau,
            theta1=_grid_index(grid, window.theta1) * grid.tau,
        )
        for window in schedule.variance_windows
    )
    snapped = AnomalySchedule(
        instant_jumps=instant, paired_jumps=paired, variance_windows=windows
    )
    validate_schedule(snapped, grid)
    return snapped


def _tau_powers(tau: float) -> tuple[float, float]:
    return tau * tau / 2.0, tau * tau * tau / 6.0


def _advance(x1, x2, x3, mu1, mu2, mu3, tau, half_tau2, sixth_tau3,
             j1, j2, j3, g1, g2, g3):
    # One exact transition.  Works elementwise on scalars or arrays; every
    # caller must go through this kernel so rounding is identical everywhere.
    y1 = x1 + (mu1 + x2) * tau + (mu2 + x3) * half_tau2 + mu3 * sixth_tau3 + j1 + g1
    y2 = x2 + (mu2 + x3) * tau + mu3 * half_tau2 + j2 + g2
    y3 = x3 + mu3 * tau + j3 + g3
    return y1, y2, y3


def step(
    state: ClockState,
    params: ClockParameters,
    tau: float,
    innovation: np.ndarray,
    jump_add: np.ndarray,
) -> ClockState:
    """Advance one grid step with a given innovation and jump vector.

    The jump vector acts once, on its own components only; its effect on the
    components below propagates through subsequent steps, which is what makes
    a frequency jump show up as a phase ramp.

    Returns
    -------
    ClockState
        State at epoch ``state.epoch_index + 1``.
    """
    tau = float(tau)
    if not math.isfinite(tau) or tau <= 0.0:
        raise DomainError(f"tau must be finite and > 0, got {tau!r}")
    innovation = np.asarray(innovation, dtype=float)
    jump_add = np.asarray(jump_add, dtype=float)
    if innovation.shape != (3,) or jump_add.shape != (3,):
        raise ShapeError(
            f"innovation and jump_add must have shape (3,), got "
            f"{innovation.shape} and {jump_add.shape}"
        )
    half_tau2, sixth_tau3 = _tau_powers(tau)
    y1, y2, y3 = _advance(
        state.x1, state.x2, state.x3,
        params.mu1, params.mu2, params.mu3,
        tau, half_tau2, sixth_tau3,
        innovation[0], innovation[1], innovation[2],
        jump_add[0], jump_add[1], jump_add[2],
    )
    index = state.epoch_index + 1
    return ClockState(
        x1=float(y1), x2=float(y2), x3=float(y3), epoch_index=index, t=index * tau
    )


class _StateView(Sequence):
    """Read-only sequence of ClockState built lazily over a sample array."""

    def __init__(self, trajectory: "Trajectory"):
        self._trajectory = trajectory

    def __len__(self) -> int:
        return self._trajectory.xs.shape[0]

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        return self._trajectory.state_at(index)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One sample path: states on the grid plus the stream key that made it."""

    grid: SimulationGrid
    xs: np.ndarray
    seed: int
    path_id: int

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.shape != (self.grid.n_epochs, 3):
            raise ShapeError(
                f"xs must have shape ({self.grid.n_epochs}, 3), got {xs.shape}"
            )
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    @property
    def states(self) -> Sequence[ClockState]:
        return _StateView(self)

    def state_at(self, epoch_index: int) -> ClockState:
        epoch_index = int(epoch_index)
        if epoch_index < 0:
            epoch_index += self.grid.n_epochs
        if not 0 <= epoch_index < self.grid.n_epochs:
            raise IndexError(f"epoch index {epoch_index} out of range")
        row = self.xs[epoch_index]
        return ClockState(
            x1=float(row[0]),
            x2=float(row[1]),
            x3=float(row[2]),
            epoch_index=epoch_index,
            t=epoch_index * self.grid.tau,
        )

    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def x1(self) -> np.ndarray:
        return self.xs[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.xs[:, 1]

    @property
    def x3(self) -> np.ndarray:
        return self.xs[:, 2]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Stack of paths sharing one grid and schedule, keyed by a master seed."""

    grid: SimulationGrid
    xs: np.ndarray
    seed: int

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        if xs.ndim != 3 or xs.shape[1:] != (self.grid.n_epochs, 3):
            raise ShapeError(
                f"xs must have shape (n_paths, {self.grid.n_epochs}, 3), "
                f"got {xs.shape}"
            )
        if xs.shape[0] < 1:
            raise DomainError("ensemble must hold at least one path")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)

    @property
    def n_paths(self) -> int:
        return self.xs.shape[0]

    def trajectory(self, path_id: int) -> Trajectory:
        path_id = int(path_id)
        if not 0 <= path_id < self.n_paths:
            raise IndexError(f"path_id {path_id} out of range")
        return Trajectory(
            grid=self.grid, xs=self.xs[path_id], seed=self.seed, path_id=path_id
        )

    @property
    def trajectories(self) -> tuple[Trajectory, ...]:
        cached = self.__dict__.get("_trajectories")
        if cached is None:
            cached = tuple(self.trajectory(i) for i in range(self.n_paths))
            self.__dict__["_trajectories"] = cached
        return cached


def _require_burst(params: ClockParameters, norm: NormalizedSchedule) -> None:
    if norm.has_windows and not params.has_burst:
        raise ScheduleError(
            "a variance window is scheduled but burst diffusions "
            "(sigma1p, sigma2p, sigma3p) are not set"
        )


def _factors(
    params: ClockParameters, tau: float, norm: NormalizedSchedule
) -> tuple[np.ndarray, np.ndarray | None]:
    nominal = InnovationModel.from_sigmas(params.sigmas, tau).a
    if not norm.has_windows:
        return nominal, None
    burst = InnovationModel.from_sigmas(params.burst_sigmas, tau).a
    return nominal, burst


def _path_key(seed: int, path_id: int) -> np.random.Generator:
    key = np.array([seed, path_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _innovations(a_nominal, a_burst, mask, z1, z2, z3):
    # z arrays have step as their leading axis (shape (n_steps,) or
    # (n_steps, m)); mask must broadcast against them.
    j1, j2, j3 = _apply_factor(a_nominal, z1, z2, z3)
    if a_burst is not None:
        b1, b2, b3 = _apply_factor(a_burst, z1, z2, z3)
        j1 = np.where(mask, b1, j1)
        j2 = np.where(mask, b2, j2)
        j3 = np.where(mask, b3, j3)
    return j1, j2, j3


def simulate_path(
    params: ClockParameters,
    init: InitialState,
    schedule: AnomalySchedule,
    grid: SimulationGrid,
    seed: int,
    path_id: int = 0,
) -> Trajectory:
    """Generate one exact sample path.

    Draws 3 normals per step from the (seed, path_id) substream whether or
    not the diffusions are zero, so a path's noise stream is a function of
    its key alone.  Jumps scheduled at index 0 modify the initial state
    directly; the recursion itself only produces jumps at indices >= 1.

    Returns
    -------
    Trajectory
        n_steps + 1 states, bitwise equal to the matching row of
        :func:`simulate_ensemble` for the same seed.
    """
    norm = validate_schedule(schedule, grid)
    _require_burst(params, norm)
    a_nominal, a_burst = _factors(params, grid.tau, norm)
    n_steps = grid.n_steps
    tau = grid.tau
    half_tau2, sixth_tau3 = _tau_powers(tau)
    mu1, mu2, mu3 = params.mu1, params.mu2, params.mu3

    z = _path_key(seed, path_id).standard_normal(3 * n_steps)
    mask = norm.burst_mask() if norm.has_windows else False
    j1, j2, j3 = _innovations(a_nominal, a_burst, mask, z[0::3], z[1::3], z[2::3])
    jumps = norm.jump_table()

    xs = np.empty((n_steps + 1, 3))
    x1, x2, x3 = init.c1, init.c2, init.c3
    g = jumps.get(0)
    if g is not None:
        x1 = x1 + g[0]
        x2 = x2 + g[1]
        x3 = x3 + g[2]
    xs[0, 0] = x1
    xs[0, 1] = x2
    xs[0, 2] = x3
    for k in range(n_steps):
        g1, g2, g3 = jumps.get(k + 1, (0.0, 0.0, 0.0))
        x1, x2, x3 = _advance(
            x1, x2, x3, mu1, mu2, mu3, tau, half_tau2, sixth_tau3,
            j1[k], j2[k], j3[k], g1, g2, g3,
        )
        xs[k + 1, 0] = x1
        xs[k + 1, 1] = x2
        xs[k + 1, 2] = x3
    return Trajectory(grid=grid, xs=xs, seed=seed, path_id=path_id)


def _run_chunk(
    out: np.ndarray,
    params: ClockParameters,
    init: InitialState,
    norm: NormalizedSchedule,
    grid: SimulationGrid,
    seed: int,
    first_path: int,
    a_nominal: np.ndarray,
    a_burst: np.ndarray | None,
) -> None:
    # Fill out[i] with the path first_path + i; out has shape (m, n_epochs, 3).
    m = out.shape[0]
    n_steps = grid.n_steps
    tau = grid.tau
    half_tau2, sixth_tau3 = _tau_powers(tau)
    mu1, mu2, mu3 = params.mu1, params.mu2, params.mu3

    # Step-major z layout keeps the per-step slices contiguous in the loop.
    z1 = np.empty((n_steps, m))
    z2 = np.empty((n_steps, m))
    z3 = np.empty((n_steps, m))
    for i in range(m):
        z = _path_key(seed, first_path + i).standard_normal(3 * n_steps)
        z1[:, i] = z[0::3]
        z2[:, i] = z[1::3]
        z3[:, i] = z[2::3]
    mask = norm.burst_mask()[:, None] if norm.has_windows else False
    j1, j2, j3 = _innovations(a_nominal, a_burst, mask, z1, z2, z3)
    jumps = norm.jump_table()

    x1 = np.full(m, init.c1)
    x2 = np.full(m, init.c2)
    x3 = np.full(m, init.c3)
    g = jumps.get(0)
    if g is not None:
        x1 = x1 + g[0]
        x2 = x2 + g[1]
        x3 = x3 + g[2]
    out[:, 0, 0] = x1
    out[:, 0, 1] = x2
    out[:, 0, 2] = x3
    for k in range(n_steps):
        g1, g2, g3 = jumps.get(k + 1, (0.0, 0.0, 0.0))
        x1, x2, x3 = _advance(
            x1, x2, x3, mu1, mu2, mu3, tau, half_tau2, sixth_tau3,
            j1[k], j2[k], j3[k], g1, g2, g3,
        )
        out[:, k + 1, 0] = x1
        out[:, k + 1, 1] = x2
        out[:, k + 1, 2] = x3


def _thread_count(n_chunks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(
            f"{THREADS_ENV} must be a non-negative integer, got {raw!r}"
        ) from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0 (0 = auto), got {n}")
    if n == 0:
        n = os.cpu_count() or 1
    return max(1, min(n, n_chunks))


def simulate_ensemble(
    params: ClockParameters,
    init: InitialState,
    schedule: AnomalySchedule,
    grid: SimulationGrid,
    seed: int,
    n_paths: int,
) -> Ensemble:
    """Generate n_paths independent paths with path_id = 0..n_paths-1.

    Work is split into fixed-size chunks; the CLOCKFORGE_THREADS environment
    variable caps how many run concurrently (0 = one per CPU, unset = run
    sequentially).  Because every path owns its (seed, path_id) substream
    and chunks write disjoint slices, the result is identical for every
    chunking and thread count.
    """
    n_paths = int(n_paths)
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths!r}")
    norm = validate_schedule(schedule, grid)
    _require_burst(params, norm)
    a_nominal, a_burst = _factors(params, grid.tau, norm)

    xs = np.empty((n_paths, grid.n_epochs, 3))
    spans = [
        (start, min(start + CHUNK_PATHS, n_paths))
        for start in range(0, n_paths, CHUNK_PATHS)
    ]
    workers = _thread_count(len(spans))
    if workers <= 1:
        for start, stop in spans:
            _run_chunk(
                xs[start:stop], params, init, norm, grid, seed, start,
                a_nominal, a_burst,
            )
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _run_chunk,
                    xs[start:stop], params, init, norm, grid, seed, start,
                    a_nominal, a_burst,
                )
                for start, stop in spans
            ]
            for future in futures:
                future.result()
    return Ensemble(grid=grid, xs=xs, seed=seed)
