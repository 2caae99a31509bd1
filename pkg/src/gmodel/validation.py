"""Cross-model validation studies and the operator self-test.

Three independent consistency instruments:

* asymptotic_order_study: the conduit run at fine tolerance is the
  oracle; the reduced models must approach it at second order in the
  amplitude.
* integrator_convergence_study: fixed-step self-convergence of RK4
  against a much finer reference.
* operator_selftest: re-runs the spectral-operator identities on
  freshly generated fields and reports per-check worst errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .equations import (
    CascadeState,
    ModelKind,
    ModelSpec,
    reconstruct_g,
)
from .integrate import IntegratorConfig, Scheme, TerminationKind, integrate
from .spectral import FloatArray, PeriodicGrid, RealField

DEFAULT_REFERENCE_FACTOR = 100.0  # reference runs are this much tighter


@dataclass(frozen=True)
class StudyConfig:
    """Knobs shared by the order study runs."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    snapshot_count: int = 10
    reference_factor: float = DEFAULT_REFERENCE_FACTOR
    against: str = "gmodel"  # or "cascade"

    def __post_init__(self) -> None:
        if self.against not in ("gmodel", "cascade"):
            raise ValueError("against must be 'gmodel' or 'cascade'")
        if self.snapshot_count < 1:
            raise ValueError("snapshot_count must be >= 1")
        if self.reference_factor < 1.0:
            raise ValueError("reference_factor must be >= 1")


@dataclass(frozen=True)
class OrderStudyReport:
    epsilons: tuple[float, ...]
    errors: tuple[float, ...]
    per_pair_orders: tuple[float, ...]
    fitted_order: float
    against: str
    runtime_seconds: float


def _check_complete(traj, what: str) -> None:
    if traj.termination.kind is not TerminationKind.REACHED_T_END:
        raise RuntimeError(
            f"{what} run terminated early: {traj.termination.kind.value} "
            f"({traj.termination.detail})")


def asymptotic_order_study(
    g0: RealField,
    epsilons,
    t_end: float,
    cfg: StudyConfig | None = None,
) -> OrderStudyReport:
    """Model error e(eps) = max over snapshots of sup |(u-1)/eps - g|.

    The conduit run at reference tolerance is the oracle.  The reduced
    model enters in the scaled frame: the explicit model is evolved from
    eps*g0 (its quadratic terms carry the amplitude) and divided back by
    eps, while the cascade is evolved once, amplitude-free, and
    reconstructed per eps as h0 + eps*h1.  Either way the comparison
    target is second-order accurate in eps at fixed time.

    All runs are marched segment by segment so every snapshot time is an
    exact integration endpoint; the linearly interpolated dense output
    would otherwise leak an eps-independent floor into e(eps).  A single
    epsilon yields a degenerate report with no pair orders and
    fitted_order = nan.
    """
    cfg = cfg or StudyConfig()
    epsilons = tuple(float(e) for e in epsilons)
    if not epsilons:
        raise ValueError("need at least one epsilon")
    if any(not 0.0 < e <= 0.2 for e in epsilons):
        raise ValueError("epsilons must lie in (0, 0.2]")
    if any(later >= earlier for earlier, later in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    start = time.perf_counter()
    grid = g0.grid
    stride = t_end / cfg.snapshot_count
    study_cfg = IntegratorConfig(
        scheme=Scheme.ADAPTIVE_RK45, abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol,
        snapshot_stride=stride)
    reference_cfg = IntegratorConfig(
        scheme=Scheme.ADAPTIVE_RK45,
        abs_tol=cfg.abs_tol / cfg.reference_factor,
        rel_tol=cfg.rel_tol / cfg.reference_factor,
        snapshot_stride=stride)

    def march(spec: ModelSpec, state, config: IntegratorConfig, what: str):
        """States at the snapshot times, each reached exactly."""
        states = []
        for _ in range(cfg.snapshot_count):
            traj = integrate(spec, state, stride, config)
            _check_complete(traj, what)
            state = traj.final_state()
            states.append(state)
        return states

    cascade_states = None
    if cfg.against == "cascade":
        state0 = CascadeState(g0, grid.zeros())
        cascade_states = march(
            ModelSpec(ModelKind.EPS_CASCADE, epsilon=epsilons[0]),
            state0, study_cfg, "cascade")

    errors = []
    for eps in epsilons:
        u0 = RealField(grid, 1.0 + eps * g0.values)
        conduit_states = march(ModelSpec(ModelKind.CONDUIT), u0,
                               reference_cfg, f"conduit eps={eps}")
        if cfg.against == "gmodel":
            model_states = march(
                ModelSpec(ModelKind.GMODEL), RealField(grid, eps * g0.values),
                study_cfg, f"g-model eps={eps}")
            model_fields = [s.values / eps for s in model_states]
        else:
            model_fields = [reconstruct_g(s, eps).values
                            for s in cascade_states]
        worst = 0.0
        for cu, mf in zip(conduit_states, model_fields):
            scaled = (cu.values - 1.0) / eps
            worst = max(worst, float(np.max(np.abs(scaled - mf))))
        errors.append(worst)

    pair_orders = tuple(
        float(np.log(errors[i] / errors[i + 1])
              / np.log(epsilons[i] / epsilons[i + 1]))
        for i in range(len(epsilons) - 1))
    if len(epsilons) >= 2:
        fitted = float(np.polyfit(np.log(epsilons), np.log(errors), 1)[0])
    else:
        fitted = float("nan")
    return OrderStudyReport(
        epsilons=epsilons, errors=tuple(errors), per_pair_orders=pair_orders,
        fitted_order=fitted, against=cfg.against,
        runtime_seconds=time.perf_counter() - start)


@dataclass(frozen=True)
class ConvergenceReport:
    dt_list: tuple[float, ...]
    errors: tuple[float, ...]
    per_pair_orders: tuple[float, ...]
    fitted_order: float
    runtime_seconds: float


def integrator_convergence_study(
    spec: ModelSpec,
    g0: RealField,
    t_end: float,
    dt_list,
) -> ConvergenceReport:
    """RK4 self-convergence against a reference at dt_min/8.

    dt_list must be a decreasing halving sequence with at least 4
    entries; errors are sup-norm differences of the final state.
    """
    dt_list = tuple(float(dt) for dt in dt_list)
    if len(dt_list) < 4:
        raise ValueError("dt_list needs at least 4 halving entries")
    for a, b in zip(dt_list, dt_list[1:]):
        if not np.isclose(a / b, 2.0, rtol=1e-9):
            raise ValueError("dt_list must halve from entry to entry")
    start = time.perf_counter()

    def final_state(dt: float) -> FloatArray:
        config = IntegratorConfig(scheme=Scheme.RK4, dt=dt,
                                  snapshot_stride=t_end,
                                  monitor_every_step=False)
        traj = integrate(spec, g0, t_end, config)
        _check_complete(traj, f"RK4 dt={dt}")
        return traj.snapshots[-1].values

    reference = final_state(dt_list[-1] / 8.0)
    errors = tuple(float(np.max(np.abs(final_state(dt) - reference)))
                   for dt in dt_list)
    pair_orders = tuple(
        float(np.log(errors[i] / errors[i + 1])
              / np.log(dt_list[i] / dt_list[i + 1]))
        for i in range(len(dt_list) - 1))
    fitted = float(np.polyfit(np.log(dt_list), np.log(errors), 1)[0])
    return ConvergenceReport(
        dt_list=dt_list, errors=errors, per_pair_orders=pair_orders,
        fitted_order=fitted, runtime_seconds=time.perf_counter() - start)


# operator self-test ---------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst_error: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class SelftestReport:
    passed: bool
    checks: tuple[CheckResult, ...]
    n_points: int
    seed: int

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _random_band_limited(grid: PeriodicGrid, rng, zero_mean: bool = True) -> FloatArray:
    cutoff = grid.dealias_cutoff
    half = np.zeros(grid.n_points // 2 + 1, dtype=np.complex128)
    k = np.arange(1, cutoff + 1)
    mags = np.exp(-0.08 * k)
    half[1 : cutoff + 1] = mags * (rng.standard_normal(cutoff)
                                   + 1j * rng.standard_normal(cutoff))
    if not zero_mean:
        half[0] = rng.standard_normal()
    return grid.from_spectral(half)


def operator_selftest(
    n_points: int = 256,
    seed: int = 0,
    smoother_symbol_override: FloatArray | None = None,
    flux_symbol_override: FloatArray | None = None,
) -> SelftestReport:
    """Run the spectral-operator identities and report worst errors.

    The symbol overrides exist for fault-injection tests: passing a
    perturbed symbol must make the corresponding check fail.
    """
    grid = PeriodicGrid(n_points)
    rng = np.random.default_rng(seed)
    helm = (smoother_symbol_override if smoother_symbol_override is not None
            else grid._helm)
    helm_dz = (flux_symbol_override if flux_symbol_override is not None
               else grid._helm_dz)
    n = grid.n_points

    def apply_sym(sym, values):
        return np.fft.irfft(sym * np.fft.rfft(values), n=n)

    checks = []

    # pure-mode multiplier actions against the closed forms
    worst = 0.0
    z = grid.nodes
    for k in range(0, grid.dealias_cutoff + 1):
        ck, sk = np.cos(k * z), np.sin(k * z)
        denom = 1.0 + k * k
        worst = max(worst, float(np.max(np.abs(apply_sym(helm, ck) - ck / denom))))
        worst = max(worst, float(np.max(np.abs(
            apply_sym(helm_dz, ck) - (-k / denom) * sk))))
        if k > 0:
            worst = max(worst, float(np.max(np.abs(
                apply_sym(helm, sk) - sk / denom))))
            worst = max(worst, float(np.max(np.abs(
                apply_sym(helm_dz, sk) - (k / denom) * ck))))
    checks.append(CheckResult("multiplier_exactness", worst, 1e-12, worst <= 1e-12))

    f = _random_band_limited(grid, rng, zero_mean=False)
    g = _random_band_limited(grid, rng)
    scale = float(np.max(np.abs(f)))

    f_zz = apply_sym(grid._d2, f)
    err = float(np.max(np.abs(apply_sym(helm, f - f_zz) - f))) / scale
    checks.append(CheckResult("identity_composition", err, 1e-11, err <= 1e-11))

    err = float(np.max(np.abs(
        apply_sym(grid._d1, apply_sym(helm, f)) - apply_sym(helm_dz, f)))) / scale
    checks.append(CheckResult("flux_factorization", err, 1e-11, err <= 1e-11))

    quad = 2.0 * np.pi / n  # spectrally exact quadrature weight

    lhs = quad * float(np.sum(apply_sym(helm_dz, f) * g))
    rhs = -quad * float(np.sum(f * apply_sym(helm_dz, g)))
    norm = max(abs(lhs), abs(rhs), 1e-30)
    err = abs(lhs - rhs) / max(norm, 1.0)
    checks.append(CheckResult("flux_skew_adjoint", err, 1e-11, err <= 1e-11))

    lhs = quad * float(np.sum(apply_sym(helm, f) * g))
    rhs = quad * float(np.sum(f * apply_sym(helm, g)))
    err = abs(lhs - rhs) / max(abs(lhs), 1.0)
    positive = quad * float(np.sum(apply_sym(helm, f) * f))
    ok = err <= 1e-11 and positive >= -1e-11
    checks.append(CheckResult("smoother_self_adjoint_positive", max(err, -positive), 1e-11, ok))

    dg = apply_sym(helm_dz, g)
    dg_zz = apply_sym(helm_dz, apply_sym(grid._d2, g))
    g_zz = apply_sym(grid._d2, g)
    integral = quad * float(np.sum(g_zz * dg - g * dg_zz))
    scale_g = max(float(np.max(np.abs(g_zz))) * float(np.max(np.abs(dg))), 1.0)
    err = abs(integral) / scale_g
    checks.append(CheckResult("bracket_orthogonality", err, 1e-11, err <= 1e-11))

    return SelftestReport(
        passed=all(c.passed for c in checks),
        checks=tuple(checks), n_points=n_points, seed=seed)
