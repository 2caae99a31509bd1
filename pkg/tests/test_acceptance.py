"""Acceptance gate: the package-level claims, one criterion per test.

Each test prints a single [PASS]/[FAIL] line with the measured value
and tolerance, written straight to the terminal so the gate's outcome
is visible even when pytest captures stdout.  Tolerances here are the
published claims; unit tests elsewhere probe tighter.
"""

import json
import time

import numpy as np
import pytest

from gmodel.cli import main as cli_main
from gmodel.equations import ModelKind, ModelSpec, velocity_residual_arr, velocity_solve_arr
from gmodel.integrate import IntegratorConfig, Scheme, TerminationKind, integrate
from gmodel.spectral import PeriodicGrid
from gmodel.validation import (
    StudyConfig,
    asymptotic_order_study,
    integrator_convergence_study,
    operator_selftest,
)
from gmodel.waves import (
    ContinuationConfig,
    bifurcation_speed,
    continue_branch,
    kernel_check,
    newton_solve,
    wave_residual,
)


GMODEL = ModelSpec(kind=ModelKind.GMODEL)
CONDUIT = ModelSpec(kind=ModelKind.CONDUIT)

MEAN_DRIFT_TOL = 1e-9


_CAPTURE = None


@pytest.fixture(autouse=True)
def _live_lines(capsys):
    # criterion verdict lines must reach the terminal even under
    # pytest's output capture
    global _CAPTURE
    _CAPTURE = capsys
    yield
    _CAPTURE = None


def announce(name: str, ok: bool, detail: str) -> None:
    tag = "PASS" if ok else "FAIL"
    line = f"[{tag}] {name}: {detail}"
    if _CAPTURE is not None:
        with _CAPTURE.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


def assert_mean_drift(traj) -> float:
    """Conservation clause applied to a suite trajectory."""
    means = np.array([rec.mean for rec in traj.diagnostics])
    drift = float(np.max(np.abs(means - means[0])))
    assert drift <= MEAN_DRIFT_TOL
    return drift


def test_multiplier_suite():
    start = time.perf_counter()
    report = operator_selftest(n_points=256)
    elapsed = time.perf_counter() - start
    exact = report.check("multiplier_exactness")
    identity = report.check("identity_composition")
    factor = report.check("flux_factorization")
    ok = (report.passed and exact.worst_error <= 1e-12
          and identity.worst_error <= 1e-11 and factor.worst_error <= 1e-11
          and elapsed < 1.0)
    announce("multiplier-suite", ok,
             f"pure modes {exact.worst_error:.2e} (tol 1e-12), "
             f"identities {max(identity.worst_error, factor.worst_error):.2e} "
             f"(tol 1e-11), {elapsed:.2f}s (< 1s)")
    assert ok


def test_linear_phase_speeds():
    start = time.perf_counter()
    grid = PeriodicGrid(256)
    amplitude = 1e-6
    worst = 0.0
    for k in (1, 2, 3):
        g0 = grid.field(amplitude * np.cos(k * grid.nodes))
        config = IntegratorConfig(
            scheme=Scheme.ADAPTIVE_RK45, abs_tol=1e-10 * amplitude,
            rel_tol=1e-10, snapshot_stride=1.0)
        traj = integrate(GMODEL, g0, 1.0, config)
        assert traj.termination.kind is TerminationKind.REACHED_T_END
        assert_mean_drift(traj)
        ratio = (np.fft.rfft(traj.final_state().values)[k]
                 / np.fft.rfft(traj.snapshots[0].values)[k])
        measured = -np.angle(ratio) / (k * 1.0)
        worst = max(worst, abs(measured - 2.0 / (1.0 + k * k)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10.0
    announce("linear-phase-speeds", ok,
             f"worst |c - 2/(1+k^2)| = {worst:.2e} (tol 1e-06), "
             f"{elapsed:.2f}s (< 10s)")
    assert ok


def test_bifurcation_speeds_and_residuals():
    start = time.perf_counter()
    worst_c = 0.0
    worst_res = 0.0
    worst_recheck = 0.0
    for m in (1, 2):
        branch = continue_branch(
            ContinuationConfig(m_fold=m, s_max=1e-3, ds=1e-3, K=64))
        assert branch.termination == "reached_s_max"
        for p in branch:
            worst_res = max(worst_res, p.residual_sup)
            res2k = wave_residual(p.c, p.series.padded(128), n_modes=128)
            worst_recheck = max(worst_recheck, float(np.max(np.abs(res2k))))
        worst_c = max(worst_c,
                      abs(branch.points[-1].c - bifurcation_speed(m)))
    elapsed = time.perf_counter() - start
    ok = (worst_c <= 1e-5 and worst_res <= 1e-12
          and worst_recheck <= 1e-10 and elapsed < 30.0)
    announce("bifurcation-speeds", ok,
             f"|c - c_m| = {worst_c:.2e} (tol 1e-05), residual "
             f"{worst_res:.2e} (tol 1e-12), 2K recheck {worst_recheck:.2e} "
             f"(tol 1e-10), {elapsed:.2f}s (< 30s)")
    assert ok


def test_kernel_and_transversality():
    start = time.perf_counter()
    worst_transv = 0.0
    ok_kernel = True
    for n in range(1, 9):
        report = kernel_check(n, K=64)
        ok_kernel = ok_kernel and report.kernel_modes == (n,)
        worst_transv = max(worst_transv, abs(report.transversality + n))
    elapsed = time.perf_counter() - start
    ok = ok_kernel and worst_transv <= 1e-12 and elapsed < 1.0
    announce("kernel-transversality", ok,
             f"one kernel mode per n<=8, |transversality + n| = "
             f"{worst_transv:.2e} (tol 1e-12), {elapsed:.2f}s (< 1s)")
    assert ok


def test_wave_dynamics_consistency():
    start = time.perf_counter()
    point = newton_solve(1, K=64, s=0.01)
    grid = PeriodicGrid(256)
    phi = point.series.sample_on(grid)
    period = 2.0 * np.pi / point.c
    config = IntegratorConfig(scheme=Scheme.ADAPTIVE_RK45, abs_tol=1e-12,
                              rel_tol=1e-10, snapshot_stride=period)
    traj = integrate(GMODEL, phi, period, config)
    assert traj.termination.kind is TerminationKind.REACHED_T_END
    assert_mean_drift(traj)
    err = float(np.max(np.abs(traj.final_state().values - phi.values)))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-4 and elapsed < 60.0
    announce("wave-dynamics", ok,
             f"return error after one period = {err:.2e} (tol 1e-04), "
             f"{elapsed:.2f}s (< 60s)")
    assert ok


def test_asymptotic_order():
    start = time.perf_counter()
    grid = PeriodicGrid(256)
    g0 = grid.field(np.cos(grid.nodes))
    epsilons = (0.1, 0.05, 0.025)
    model = asymptotic_order_study(g0, epsilons, 1.0,
                                   StudyConfig(against="gmodel"))
    cascade = asymptotic_order_study(g0, epsilons, 1.0,
                                     StudyConfig(against="cascade"))
    elapsed = time.perf_counter() - start
    in_window = (1.7 <= model.fitted_order <= 2.3
                 and 1.7 <= cascade.fitted_order <= 2.3)
    agree = abs(model.fitted_order - cascade.fitted_order) <= 0.2
    ok = in_window and agree and elapsed < 300.0
    announce("asymptotic-order", ok,
             f"fitted order model {model.fitted_order:.3f}, cascade "
             f"{cascade.fitted_order:.3f} (window [1.7, 2.3], agreement "
             f"0.2), {elapsed:.1f}s (< 300s)")
    assert ok


def test_conservation_and_picard_residual():
    grid = PeriodicGrid(256)
    g_traj = integrate(GMODEL, grid.field(np.sin(grid.nodes)), 1.0,
                       IntegratorConfig(snapshot_stride=0.1))
    g_drift = assert_mean_drift(g_traj)
    u_traj = integrate(CONDUIT, grid.field(1.0 + 0.3 * np.sin(grid.nodes)),
                       1.0, IntegratorConfig(snapshot_stride=0.1))
    u_drift = assert_mean_drift(u_traj)
    worst_res = 0.0
    for state in u_traj.snapshots:
        v, _ = velocity_solve_arr(grid, state.values, CONDUIT)
        worst_res = max(worst_res,
                        velocity_residual_arr(grid, state.values, v, CONDUIT))
    ok = (max(g_drift, u_drift) <= MEAN_DRIFT_TOL
          and worst_res <= 10.0 * CONDUIT.picard_tol)
    announce("conservation", ok,
             f"mean drift {max(g_drift, u_drift):.2e} (tol 1e-09), "
             f"picard residual {worst_res:.2e} "
             f"(tol {10.0 * CONDUIT.picard_tol:.0e})")
    assert ok


def test_rk4_observed_order():
    start = time.perf_counter()
    grid = PeriodicGrid(256)
    g0 = grid.field(np.sin(grid.nodes))
    report = integrator_convergence_study(
        GMODEL, g0, 0.5, [2e-2, 1e-2, 5e-3, 2.5e-3])
    elapsed = time.perf_counter() - start
    ok = abs(report.fitted_order - 4.0) <= 0.2
    announce("rk4-order", ok,
             f"fitted order {report.fitted_order:.4f} (window 4 +- 0.2), "
             f"{elapsed:.2f}s")
    assert ok


def _reproduction_run(tmp_path, label: str, n_points: int, init: str):
    out = tmp_path / label
    code = cli_main([
        "simulate", "--model", "gmodel", "--n-points", str(n_points),
        "--init", init, "--t-end", "5", "--out", str(out)])
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    kind = meta["termination"]["kind"]
    assert kind in ("reached_t_end", "blowup_suspected")
    rows = (out / "diagnostics.csv").read_text().splitlines()[2:]
    t = np.array([float(r.split(",")[0]) for r in rows])
    values = np.array([[float(cell) for cell in r.split(",")] for r in rows])
    assert len(rows) == meta["counts"]["n_snapshots"]
    assert np.all(np.diff(t) > 0)
    assert np.all(np.isfinite(values))
    means = values[:, 4]
    assert np.max(np.abs(means - means[0])) <= MEAN_DRIFT_TOL
    return kind, float(t[-1])


def test_reproduction_runs(tmp_path):
    start = time.perf_counter()
    outcomes = {}
    for label, init in (("sin", "sin(x)"), ("sincos", "sin(x)*cos(x)")):
        outcomes[label] = _reproduction_run(
            tmp_path, f"big-{label}", 8192, init)
    coarse_start = time.perf_counter()
    for label, init in (("sin", "sin(x)"), ("sincos", "sin(x)*cos(x)")):
        _reproduction_run(tmp_path, f"small-{label}", 1024, init)
    coarse_elapsed = time.perf_counter() - coarse_start
    elapsed = time.perf_counter() - start
    ok = coarse_elapsed < 600.0
    announce("reproduction-runs", ok,
             f"sin(x) -> {outcomes['sin'][0]} at t={outcomes['sin'][1]:.4g}, "
             f"sin(x)cos(x) -> {outcomes['sincos'][0]} at "
             f"t={outcomes['sincos'][1]:.4g}; diagnostics monotone and "
             f"finite; coarse pair {coarse_elapsed:.1f}s (< 600s), total "
             f"{elapsed:.1f}s")
    assert ok
