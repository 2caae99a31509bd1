"""Time stepping with trajectory recording and blow-up monitoring.

Two schemes over a flat state vector: classical RK4 at fixed dt and an
embedded 5(4) Dormand-Prince pair with step control (safety 0.9, growth
clamped to [0.2, 5]).  Snapshots land on a fixed stride via linear
interpolation between accepted steps, so the recording cadence is
independent of the step sequence.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np

from .equations import (
    CascadeState,
    ModelKind,
    ModelSpec,
    NonFiniteFieldError,
    NonPositiveUError,
    PicardDivergedError,
    cascade_rhs_arr,
    eps_full_rhs_arr,
    gmodel_rhs_arr,
    velocity_solve_arr,
)
from .spectral import FloatArray, PeriodicGrid, RealField

State = RealField | CascadeState


class Scheme(enum.Enum):
    RK4 = "rk4"
    ADAPTIVE_RK45 = "rk45"


class TerminationKind(enum.Enum):
    REACHED_T_END = "reached_t_end"
    BLOWUP_SUSPECTED = "blowup_suspected"
    PICARD_DIVERGED = "picard_diverged"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    detail: str = ""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = Scheme.ADAPTIVE_RK45
    dt: float = 1e-3  # fixed step for RK4, initial step when adaptive
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    dt_min: float = 1e-12
    dt_max: float = np.inf
    snapshot_stride: float | None = None  # default t_end/100
    monitor_every_step: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.abs_tol <= 0.0 or self.rel_tol < 0.0:
            raise ValueError("tolerances must be positive")
        if self.dt_min <= 0.0 or self.dt_max <= self.dt_min:
            raise ValueError("need 0 < dt_min < dt_max")
        if self.snapshot_stride is not None and self.snapshot_stride <= 0.0:
            raise ValueError("snapshot_stride must be positive")


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar health indicators of one recorded state."""

    sup_norm: float
    h1_norm: float
    h2_norm: float
    mean: float
    min_u: float
    analyticity_radius: float
    spectral_tail_fraction: float

    FIELDS: ClassVar[tuple[str, ...]] = (
        "sup_norm", "h1_norm", "h2_norm", "mean", "min_u",
        "analyticity_radius", "spectral_tail_fraction")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.sup_norm, self.h1_norm, self.h2_norm, self.mean,
                self.min_u, self.analyticity_radius,
                self.spectral_tail_fraction)

    def all_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_tuple())))


@dataclass(frozen=True)
class BlowupPolicy:
    """Thresholds that turn diagnostics into a stop decision.

    radius_min defaults to four grid spacings: below that the fitted
    spectral decay rate says the smallest resolved scale is active.  A
    radius of exactly 0 means "tail below the fit floor", i.e. an
    extremely smooth field, and never triggers.
    """

    radius_min: float
    tail_fraction_max: float = 1e-4
    sup_growth_factor: float = 1e3
    check_positivity: bool = False

    @classmethod
    def for_grid(cls, grid: PeriodicGrid, kind: ModelKind) -> "BlowupPolicy":
        return cls(
            radius_min=4.0 * grid.spacing,
            check_positivity=kind in (ModelKind.CONDUIT, ModelKind.MAGMA),
        )


@dataclass(frozen=True)
class BlowupVerdict:
    reason: str
    record_index: int


@dataclass
class Trajectory:
    grid: PeriodicGrid
    spec: ModelSpec
    config: IntegratorConfig
    times: list[float] = field(default_factory=list)
    snapshots: list[State] = field(default_factory=list)
    diagnostics: list[DiagnosticsRecord] = field(default_factory=list)
    termination: Termination = Termination(TerminationKind.REACHED_T_END)
    accepted_steps: int = 0
    rejected_steps: int = 0

    def final_state(self) -> State:
        return self.snapshots[-1]


# diagnostics ----------------------------------------------------------


def _radius_from_amplitudes(grid: PeriodicGrid, amplitudes: FloatArray) -> float:
    lo = grid.n_points // 8
    hi = grid.dealias_cutoff
    if hi <= lo:
        return 0.0
    k = np.arange(lo, hi + 1, dtype=np.float64)
    amps = amplitudes[lo : hi + 1]
    usable = amps > 1e-14
    if int(np.count_nonzero(usable)) < 4:
        return 0.0
    slope = np.polyfit(k[usable], np.log(amps[usable]), 1)[0]
    return float(max(-slope, 0.0))


def _tail_from_amplitudes(grid: PeriodicGrid, amplitudes: FloatArray) -> float:
    power = amplitudes[1:] ** 2
    total = float(np.sum(power))
    if total < 1e-28:
        return 0.0
    cutoff = grid.dealias_cutoff
    return float(np.sum(power[cutoff // 2 : cutoff])) / total


def estimate_analyticity_radius(f: RealField) -> float:
    """Least-squares decay rate of log|fhat_k| over the upper mode band.

    Fits log|fhat_k| ~ C - delta*k for k in [n/8, dealias_cutoff],
    keeping only modes with |fhat_k| > 1e-14; returns 0 when fewer than
    4 modes survive (tail below floor) or when the fitted slope is not
    a decay.
    """
    amplitudes = np.abs(np.fft.rfft(f.values)) / f.grid.n_points
    return _radius_from_amplitudes(f.grid, amplitudes)


def diagnostics_record(grid: PeriodicGrid, values: FloatArray) -> DiagnosticsRecord:
    coeffs = np.fft.rfft(values) / grid.n_points
    amplitudes = np.abs(coeffs)
    k = grid.wavenumbers
    power = amplitudes ** 2
    power[1:-1] *= 2.0  # interior modes appear at +k and -k
    w1 = 1.0 + k * k
    return DiagnosticsRecord(
        sup_norm=float(np.max(np.abs(values))),
        h1_norm=float(np.sqrt(np.sum(w1 * power))),
        h2_norm=float(np.sqrt(np.sum(w1 * w1 * power))),
        mean=float(coeffs[0].real),
        min_u=float(np.min(values)),
        analyticity_radius=_radius_from_amplitudes(grid, amplitudes),
        spectral_tail_fraction=_tail_from_amplitudes(grid, amplitudes),
    )


def detect_blowup(
    history,
    policy: BlowupPolicy,
) -> BlowupVerdict | None:
    """First record that crosses a policy threshold, if any.

    Growth is measured against the first record; the spectral criteria
    are skipped for it, so constant-in-time diagnostics never trigger.
    """
    if not history:
        return None
    sup0 = history[0].sup_norm
    for i, rec in enumerate(history):
        if policy.check_positivity and rec.min_u <= 0.0:
            return BlowupVerdict("positivity", i)
        if i == 0:
            continue
        if 0.0 < rec.analyticity_radius < policy.radius_min:
            return BlowupVerdict("analyticity_radius", i)
        if rec.spectral_tail_fraction > policy.tail_fraction_max:
            return BlowupVerdict("spectral_tail", i)
        if sup0 > 0.0 and rec.sup_norm > policy.sup_growth_factor * sup0:
            return BlowupVerdict("sup_growth", i)
    return None


# right-hand sides over flat vectors ----------------------------------


def make_rhs(grid: PeriodicGrid, spec: ModelSpec) -> tuple[
    Callable[[FloatArray], FloatArray],
    Callable[[State], FloatArray],
    Callable[[FloatArray], State],
    Callable[[FloatArray], FloatArray],
]:
    """(rhs, pack, unpack, observable) for the model kind.

    rhs maps a flat state vector to its time derivative; observable
    extracts the field the diagnostics watch (u for the parent models,
    g or its cascade reconstruction otherwise).
    """
    kind = spec.kind
    identity = lambda y: y  # noqa: E731

    if kind is ModelKind.GMODEL:
        return (lambda y: gmodel_rhs_arr(grid, y),
                lambda s: s.values.copy(),
                lambda y: RealField(grid, y.copy()),
                identity)
    if kind in (ModelKind.CONDUIT, ModelKind.MAGMA):
        return (lambda y: velocity_solve_arr(grid, y, spec)[0],
                lambda s: s.values.copy(),
                lambda y: RealField(grid, y.copy()),
                identity)
    if kind is ModelKind.EPS_FULL:
        eps = spec.epsilon
        return (lambda y: eps_full_rhs_arr(grid, y, eps, spec)[0],
                lambda s: s.values.copy(),
                lambda y: RealField(grid, y.copy()),
                identity)
    if kind is ModelKind.EPS_CASCADE:
        n = grid.n_points
        eps = spec.epsilon

        def rhs(y: FloatArray) -> FloatArray:
            d0, d1 = cascade_rhs_arr(grid, y[:n], y[n:])
            return np.concatenate([d0, d1])

        def pack(s: CascadeState) -> FloatArray:
            return np.concatenate([s.h0.values, s.h1.values])

        def unpack(y: FloatArray) -> CascadeState:
            return CascadeState(RealField(grid, y[:n].copy()),
                                RealField(grid, y[n:].copy()))

        return rhs, pack, unpack, (lambda y: y[:n] + eps * y[n:])
    raise ValueError(f"unknown model kind {kind}")


# steppers -------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])


def _rk4_increment(rhs, y: FloatArray, dt: float) -> FloatArray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp54_step(rhs, y: FloatArray, dt: float) -> tuple[FloatArray, float]:
    """One embedded step: (5th-order solution, sup-norm error estimate)."""
    k = [rhs(y)]
    for i in range(1, 7):
        yi = y + dt * sum(a * ki for a, ki in zip(_DP_A[i], k))
        k.append(rhs(yi))
    y_new = y + dt * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
    err = dt * sum(e * ki for e, ki in zip(_DP_ERR, k) if e != 0.0)
    return y_new, float(np.max(np.abs(err)))


# driver ---------------------------------------------------------------


def integrate(
    spec: ModelSpec,
    initial: State,
    t_end: float,
    config: IntegratorConfig | None = None,
    policy: BlowupPolicy | None = None,
) -> Trajectory:
    """Evolve the model to t_end, recording snapshots and diagnostics.

    The trajectory always records t = 0 and the final accepted time; on
    early termination (blow-up suspicion, divergent implicit solve,
    step underflow) the partial trajectory is returned with the reason
    attached.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    config = config or IntegratorConfig()
    grid = initial.grid
    if spec.kind in (ModelKind.CONDUIT, ModelKind.MAGMA):
        min_u0 = float(np.min(initial.values))
        if min_u0 <= 0.0:
            raise NonPositiveUError(min_u0)
    if policy is None:
        policy = BlowupPolicy.for_grid(grid, spec.kind)
    rhs, pack, unpack, observable = make_rhs(grid, spec)
    stride = config.snapshot_stride or t_end / 100.0
    tiny = 1e-12 * max(1.0, t_end)

    traj = Trajectory(grid=grid, spec=spec, config=config)
    y = pack(initial)
    t = 0.0

    def record(time: float, state_vec: FloatArray) -> None:
        if traj.times and time <= traj.times[-1] + tiny:
            return
        traj.times.append(time)
        traj.snapshots.append(unpack(state_vec))
        traj.diagnostics.append(diagnostics_record(grid, observable(state_vec)))

    traj.times.append(0.0)
    traj.snapshots.append(unpack(y))
    baseline = diagnostics_record(grid, observable(y))
    traj.diagnostics.append(baseline)

    next_snapshot = stride
    dt = min(config.dt, config.dt_max, t_end)

    def advance_snapshots(t_prev: float, y_prev: FloatArray,
                          t_new: float, y_new: FloatArray) -> None:
        nonlocal next_snapshot
        while next_snapshot <= t_new + tiny and next_snapshot < t_end - tiny:
            theta = (next_snapshot - t_prev) / (t_new - t_prev)
            record(next_snapshot, y_prev + theta * (y_new - y_prev))
            next_snapshot += stride

    # Both the state and the clock accumulate with Neumaier
    # compensation.  Uncompensated, per-step rounding (~sqrt(steps)*eps
    # on the state, a possibly systematic ~steps*eps drift on t that
    # the clipped final step folds into the integrated duration) buries
    # the fourth-order truncation error the convergence studies measure.
    comp = np.zeros_like(y)
    t_comp = 0.0

    # The loop must reach t_end to a few ulp: exiting within the much
    # looser snapshot window would drop an O(tiny*|y'|) tail that
    # varies with dt and pollutes convergence measurements.
    eps_t = 4.0 * float(np.spacing(t_end))

    while t < t_end - eps_t:
        step_dt = min(dt, t_end - t)
        comp_new = comp
        try:
            if config.scheme is Scheme.RK4:
                term = _rk4_increment(rhs, y, step_dt) + comp
                y_new = y + term
                comp_new = np.where(np.abs(y) >= np.abs(term),
                                    (y - y_new) + term, (term - y_new) + y)
            else:
                y_new, err = _dp54_step(rhs, y, step_dt)
                tol = config.abs_tol + config.rel_tol * float(np.max(np.abs(y)))
                factor = 5.0 if err == 0.0 else 0.9 * (tol / err) ** 0.2
                dt = min(step_dt * min(5.0, max(0.2, factor)), config.dt_max)
                if err > tol:
                    traj.rejected_steps += 1
                    if dt < config.dt_min:
                        traj.termination = Termination(
                            TerminationKind.STEP_UNDERFLOW,
                            f"dt {dt:.3e} below dt_min at t={t:.6g}")
                        return traj
                    continue
        except PicardDivergedError as exc:
            traj.termination = Termination(
                TerminationKind.PICARD_DIVERGED, f"at t={t:.6g}: {exc}")
            return traj
        except NonPositiveUError as exc:
            traj.termination = Termination(
                TerminationKind.BLOWUP_SUSPECTED,
                f"positivity (stage state at t={t:.6g}): min_u={exc.min_u:.3g}")
            return traj
        except NonFiniteFieldError:
            traj.termination = Termination(
                TerminationKind.BLOWUP_SUSPECTED,
                f"non-finite stage state at t={t:.6g}")
            return traj

        if not np.all(np.isfinite(y_new)):
            traj.termination = Termination(
                TerminationKind.BLOWUP_SUSPECTED,
                f"non-finite state produced at t={t:.6g}")
            return traj

        t_step = step_dt + t_comp
        t_new = t + t_step
        t_comp = ((t - t_new) + t_step if abs(t) >= abs(t_step)
                  else (t_step - t_new) + t)
        crossed_snapshot = next_snapshot <= t_new + tiny
        advance_snapshots(t, y, t_new, y_new)
        traj.accepted_steps += 1
        y, t, comp = y_new, t_new, comp_new

        if config.monitor_every_step or crossed_snapshot:
            rec = diagnostics_record(grid, observable(y))
            verdict = detect_blowup((baseline, rec), policy)
            if verdict is not None:
                record(t, y)
                traj.termination = Termination(
                    TerminationKind.BLOWUP_SUSPECTED, verdict.reason)
                return traj

    record(t, y)
    traj.termination = Termination(TerminationKind.REACHED_T_END)
    return traj
