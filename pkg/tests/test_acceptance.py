"""Acceptance gate: the nine headline guarantees, one test per criterion.

Each test prints one ``[criterion N] PASS/FAIL`` line with the measured
numbers (run pytest with ``-s`` or ``-rA`` to see them all), then asserts.
"""

import math
import time

import numpy as np
import pytest

import clockforge.simulate as simulate_module
from clockforge import (
    AnomalySchedule,
    ClockParameters,
    InitialState,
    InstantJump,
    PairedJump,
    SimulationGrid,
    VarianceWindow,
    allan_deviation,
    analytic_covariance,
    anomalous_mean,
    cholesky_lower,
    empirical_moments,
    innovation_covariance,
    prediction_report,
    simulate_ensemble,
    validate_schedule,
)
from clockforge.cli import run_simulate

RAFS = ClockParameters(sigma1=5e-12, sigma2=1e-22, sigma3=1e-22)
UNIT = ClockParameters(sigma1=1.0, sigma2=1.0, sigma3=1.0)


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    assert ok, line


def test_criterion_1_prediction_base_case():
    t, level = 6000.0, 0.95
    report = prediction_report(RAFS, InitialState(), AnomalySchedule(), t, level)
    best = math.inf
    for _ in range(10):
        start = time.perf_counter()
        prediction_report(RAFS, InitialState(), AnomalySchedule(), t, level)
        best = min(best, time.perf_counter() - start)
    std_err = abs(report.std_x1 - 3.873e-10) / 3.873e-10
    half_err = abs(report.half_width - 7.59e-10) / 7.59e-10
    ok = std_err <= 1e-3 and half_err <= 1e-3 and best < 1e-3
    _report(
        1,
        ok,
        f"std={report.std_x1:.6e} (rel err {std_err:.2e} vs 3.873e-10), "
        f"half width={report.half_width:.6e} (rel err {half_err:.2e} vs "
        f"7.59e-10), runtime {best * 1e6:.0f} us < 1 ms",
    )


def test_criterion_2_jump_means_exact():
    results = {}
    for theta, expected in ((100.0, 5.9e-9), (5000.0, 1.0e-9)):
        schedule = AnomalySchedule(
            instant_jumps=(InstantJump("frequency", 1e-12, theta),)
        )
        results[theta] = (
            float(anomalous_mean(RAFS, InitialState(), schedule, 6000.0)[0]),
            expected,
        )
    ok = all(got == want for got, want in results.values())
    _report(
        2,
        ok,
        "; ".join(
            f"theta={theta:g} s -> mean_x1={got:.6e} (expected {want:.1e}, "
            f"{'exact' if got == want else 'MISMATCH'})"
            for theta, (got, want) in results.items()
        ),
    )


def test_criterion_3_noiseless_paths_match_closed_form():
    quiet = ClockParameters()
    scenarios = {
        "drift jump": AnomalySchedule(
            instant_jumps=(InstantJump("drift", 3.0, 2.0),)
        ),
        "three jumps": AnomalySchedule(
            instant_jumps=(
                InstantJump("phase", 3.0, 6.0),
                InstantJump("frequency", 3.0, 4.0),
                InstantJump("drift", 3.0, 2.0),
            )
        ),
        "paired jump": AnomalySchedule(paired_jumps=(PairedJump(4.0, 4.0, 6.0),)),
    }
    grid = SimulationGrid(tau=0.01, n_steps=1000)
    times = grid.times()
    worst = 0.0
    for schedule in scenarios.values():
        ensemble = simulate_ensemble(
            quiet, InitialState(), schedule, grid, seed=0, n_paths=1
        )
        exact = np.array(
            [anomalous_mean(quiet, InitialState(), schedule, float(t)) for t in times]
        )
        sim = ensemble.xs[0]
        scale = np.maximum(np.abs(exact), np.abs(sim))
        err = np.abs(sim - exact)
        rel = np.max(np.where(scale > 0, err / np.where(scale > 0, scale, 1.0), err))
        worst = max(worst, float(rel))
    ok = worst <= 1e-10
    _report(
        3,
        ok,
        f"worst per-epoch relative error {worst:.2e} <= 1e-10 across "
        f"{', '.join(scenarios)} (1000 steps each)",
    )


def test_criterion_4_ensemble_moments_match_law():
    grid = SimulationGrid(tau=1.0, n_steps=10)
    n_paths = 10**4
    start = time.perf_counter()
    ensemble = simulate_ensemble(
        UNIT, InitialState(), AnomalySchedule(), grid, seed=314159, n_paths=n_paths
    )
    elapsed = time.perf_counter() - start
    moments = empirical_moments(ensemble, -1)
    target_cov = analytic_covariance(UNIT, 10.0)
    se = np.sqrt(np.diag(target_cov) / n_paths)
    mean_z = np.abs(moments.mean) / se
    cov_err = np.linalg.norm(moments.covariance - target_cov) / np.linalg.norm(
        target_cov
    )
    ok = bool(np.all(mean_z <= 4.0)) and cov_err <= 0.05 and elapsed < 10.0
    _report(
        4,
        ok,
        f"mean offsets {mean_z[0]:.2f}/{mean_z[1]:.2f}/{mean_z[2]:.2f} standard "
        f"errors (<= 4), covariance Frobenius error {cov_err:.3%} (<= 5%), "
        f"runtime {elapsed:.2f} s < 10 s for 10^4 paths",
    )


def test_criterion_5_cholesky_reconstruction():
    rng = np.random.default_rng(90210)
    cases = [
        ((5e-12, 1e-22, 1e-22), 1.0),  # near-degenerate operating point
        ((5e-12, 1e-22, 1e-22), 6000.0),
        ((1.0, 1e-12, 1e-5), 0.0124),  # tiny middle pivot, live coupling
        ((1.0, 0.0, 0.0), 1.0),  # rank deficient
        ((0.0, 1.0, 0.0), 0.5),
        ((0.0, 0.0, 1.0), 2.0),
    ]
    while len(cases) < 1000:
        sigmas = tuple(10.0 ** rng.uniform(-16.0, 2.0, 3))
        tau = float(10.0 ** rng.uniform(-2.0, 3.0))
        cases.append((sigmas, tau))
    worst = 0.0
    for sigmas, tau in cases:
        q = innovation_covariance(sigmas, tau)
        a = cholesky_lower(q)
        err = np.linalg.norm(a @ a.T - q)
        norm = np.linalg.norm(q)
        worst = max(worst, err / norm if norm > 0.0 else err)
    ok = worst <= 1e-12
    _report(
        5,
        ok,
        f"worst relative reconstruction error {worst:.2e} <= 1e-12 over "
        f"{len(cases)} draws (near-degenerate cases included)",
    )


def test_criterion_6_allan_deviation_white_fm():
    grid = SimulationGrid(tau=1.0, n_steps=10**5)
    params = ClockParameters(sigma1=5e-12)
    trajectory = simulate_ensemble(
        params, InitialState(), AnomalySchedule(), grid, seed=20260815, n_paths=1
    ).trajectory(0)
    taus = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
    estimate = allan_deviation(trajectory, taus)
    adev1 = float(estimate.adev[0])
    level_err = abs(adev1 - 5e-12) / 5e-12
    slope = float(
        np.polyfit(np.log10(estimate.taus), np.log10(estimate.adev), 1)[0]
    )
    ok = level_err <= 0.20 and abs(slope + 0.5) <= 0.1
    _report(
        6,
        ok,
        f"adev(1 s)={adev1:.3e} (rel err {level_err:.1%} <= 20% of 5e-12), "
        f"log-log slope {slope:.3f} in -0.5 +/- 0.1 over tau in [1, 100] s",
    )


def test_criterion_7_variance_window_increment_ratio():
    params = ClockParameters(
        sigma1=1.0, sigma2=1.0, sigma3=1.0, sigma1p=8.0, sigma2p=8.0, sigma3p=8.0
    )
    grid = SimulationGrid(tau=0.04, n_steps=200)
    schedule = AnomalySchedule(variance_windows=(VarianceWindow(4.0, 8.0),))
    ensemble = simulate_ensemble(
        params, InitialState(), schedule, grid, seed=271828, n_paths=10**4
    )
    mask = validate_schedule(schedule, grid).burst_mask()
    dx3 = np.diff(ensemble.xs[:, :, 2], axis=1)
    inside = float(np.var(dx3[:, mask], ddof=1))
    outside = float(np.var(dx3[:, ~mask], ddof=1))
    ratio = inside / outside
    ok = 40.0 <= ratio <= 100.0
    _report(
        7,
        ok,
        f"inside/outside drift-increment variance ratio {ratio:.1f} in "
        f"[40, 100] (target 64) over 10^4 paths",
    )


def test_criterion_8_grid_refinement_invariance():
    n_paths = 10**4
    ensembles = {
        tau: simulate_ensemble(
            UNIT,
            InitialState(),
            AnomalySchedule(),
            SimulationGrid(tau=tau, n_steps=int(8.0 / tau)),
            seed=161803,
            n_paths=n_paths,
        )
        for tau in (0.5, 0.25)
    }
    moments = {
        tau: empirical_moments(ensemble, -1) for tau, ensemble in ensembles.items()
    }
    target_cov = analytic_covariance(UNIT, 8.0)
    # two independent ensembles: the mean difference has twice the variance
    se = np.sqrt(2.0 * np.diag(target_cov) / n_paths)
    mean_z = np.abs(moments[0.5].mean - moments[0.25].mean) / se
    cov_err = np.linalg.norm(
        moments[0.5].covariance - moments[0.25].covariance
    ) / np.linalg.norm(target_cov)
    ok = bool(np.all(mean_z <= 4.0)) and cov_err <= 0.05
    _report(
        8,
        ok,
        f"mean differences {mean_z[0]:.2f}/{mean_z[1]:.2f}/{mean_z[2]:.2f} "
        f"standard errors (<= 4), covariance difference {cov_err:.3%} of "
        f"||Sigma(8)||_F (<= 5%) for tau=0.5 vs tau=0.25 at T=8",
    )


def test_criterion_9_reproducibility_across_threads(tmp_path, monkeypatch):
    config = tmp_path / "scenario.ini"
    config.write_text(
        """\
[params]
sigma1 = 1.0
sigma2 = 0.5
sigma3 = 0.25

[grid]
tau = 0.5
n_steps = 50

[run]
seed = 4242
paths = 10
outputs = paths, moments

[instant_jump]
component = frequency
amplitude = 2.0
theta = 10.0
"""
    )
    monkeypatch.setattr(simulate_module, "CHUNK_PATHS", 3)  # force several chunks
    artifacts = [f"path_{i}.csv" for i in range(10)] + ["ensemble_moments.csv"]
    blobs = {}
    for label, threads in (("unset", None), ("1", "1"), ("4", "4")):
        if threads is None:
            monkeypatch.delenv("CLOCKFORGE_THREADS", raising=False)
        else:
            monkeypatch.setenv("CLOCKFORGE_THREADS", threads)
        out = tmp_path / f"run_{label}"
        assert run_simulate(config, out, plot=False) == 0
        blobs[label] = {name: (out / name).read_bytes() for name in artifacts}
    ok = blobs["unset"] == blobs["1"] == blobs["4"]
    _report(
        9,
        ok,
        f"{len(artifacts)} CSV artifacts byte-identical across thread counts "
        f"(sequential, 1, 4) with 4 path chunks",
    )
