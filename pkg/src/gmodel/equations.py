"""Right-hand sides for the periodic conduit family.

Five model kinds share one spatial discretization:

* ``conduit`` / ``magma``: the parent equation for u > 0, whose time
  derivative v = u_t is defined implicitly and recovered each call by a
  Helmholtz-preconditioned Picard iteration.
* ``eps_full``: the exact rewrite of the parent in fluctuation form
  u = 1 + eps*h, again implicit in h_t.
* ``gmodel``: the explicit second-order unidirectional model for the
  scaled fluctuation g.
* ``eps_cascade``: the first two terms (h0, h1) of the small-amplitude
  hierarchy, evolved jointly; g is reconstructed as h0 + eps*h1.

All quadratic products are dealiased; the implicit solves keep every
iterate band-limited so the defining relation can be checked by direct
substitution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .spectral import (
    FloatArray,
    PeriodicGrid,
    RealField,
    _check_same_grid,
)


class ModelKind(enum.Enum):
    GMODEL = "gmodel"
    CONDUIT = "conduit"
    MAGMA = "magma"
    EPS_FULL = "eps-full"
    EPS_CASCADE = "cascade"


class NonFiniteFieldError(ValueError):
    """A right-hand side received non-finite samples."""


class NonPositiveUError(RuntimeError):
    """min u <= 0: the parent equation left its admissible class.

    During conduit/magma time stepping this doubles as a blow-up
    indicator.
    """

    def __init__(self, min_u: float):
        super().__init__(f"u must stay positive, min(u) = {min_u:.6g}")
        self.min_u = min_u


class PicardDivergedError(RuntimeError):
    """The implicit-velocity iteration failed to contract."""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(f"{message} (last residual {last_residual:.3e}, "
                         f"{iterations} iterations)")
        self.last_residual = last_residual
        self.iterations = iterations


@dataclass(frozen=True)
class ModelSpec:
    """Which equation to evolve, with its fixed parameters."""

    kind: ModelKind
    epsilon: float | None = None
    magma_n: float = 2.0
    magma_m: float = 1.0
    picard_tol: float = 1e-12
    picard_max_iter: int = 200

    def __post_init__(self) -> None:
        if self.kind in (ModelKind.EPS_FULL, ModelKind.EPS_CASCADE):
            if self.epsilon is None:
                raise ValueError(f"{self.kind.value} requires epsilon")
            if not 0.0 < self.epsilon < 1.0:
                raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.kind is ModelKind.MAGMA:
            if self.magma_n < 1.0:
                raise ValueError(f"magma exponent n must be >= 1, got {self.magma_n}")
            if self.magma_m < 0.0:
                raise ValueError(f"magma exponent m must be >= 0, got {self.magma_m}")
        if self.picard_tol <= 0.0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")

    @property
    def exponents(self) -> tuple[float, float]:
        """(n, m) powers of the parent equation; conduit pins (2, 1)."""
        if self.kind is ModelKind.MAGMA:
            return (self.magma_n, self.magma_m)
        return (2.0, 1.0)

    def with_tolerance(self, picard_tol: float) -> "ModelSpec":
        return replace(self, picard_tol=picard_tol)


@dataclass
class CascadeState:
    """Leading-order fluctuation h0 and first correction h1."""

    h0: RealField
    h1: RealField

    def __post_init__(self) -> None:
        _check_same_grid(self.h0, self.h1)

    @property
    def grid(self) -> PeriodicGrid:
        return self.h0.grid


def _require_finite(values: FloatArray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError(f"{what} contains non-finite samples")


# g-model --------------------------------------------------------------


def gmodel_rhs_arr(grid: PeriodicGrid, g: FloatArray) -> FloatArray:
    """dg/dt for the explicit model; the input's mean is projected out.

    Zero mean of the output is a consequence of the vanishing of
    integral(g_zz * Dg - g * Dg_zz) with D the ik/(1+k^2) multiplier,
    and is asserted by the tests rather than enforced here.
    """
    gh = np.fft.rfft(g)
    gh[0] = 0.0
    gv = np.fft.irfft(gh, n=grid.n_points)
    dg = np.fft.irfft(grid._helm_dz * gh, n=grid.n_points)
    gzz = np.fft.irfft(grid._d2 * gh, n=grid.n_points)
    dgzz = np.fft.irfft(grid._helm_dz * grid._d2 * gh, n=grid.n_points)
    square_h = grid._mask * np.fft.rfft(gv * gv)
    bracket_h = grid._mask * np.fft.rfft(gzz * dg - gv * dgzz)
    rhs_h = -2.0 * grid._helm_dz * gh - grid._helm_dz * square_h \
        + 2.0 * grid._helm * bracket_h
    return np.fft.irfft(rhs_h, n=grid.n_points)


def gmodel_rhs(g: RealField) -> RealField:
    _require_finite(g.values, "g")
    return RealField(g.grid, gmodel_rhs_arr(g.grid, g.values))


# conduit / magma ------------------------------------------------------


def _damped_picard(grid, forcing_h, coupling, v0_h, tol, max_iter, what):
    """Iterate v <- H[forcing + coupling(v)] with step damping.

    coupling maps (v, v_h) to a spectral array.  If the sup-norm update
    stops shrinking, the step is halved up to 8 times before the
    iteration is declared divergent.  Returns (v, iterations).
    """
    helm = grid._helm
    n = grid.n_points
    v_h = v0_h
    v = np.fft.irfft(v_h, n=n)
    last_update = np.inf
    for iteration in range(1, max_iter + 1):
        v_new_h = helm * (forcing_h + coupling(v, v_h))
        v_new = np.fft.irfft(v_new_h, n=n)
        update = float(np.max(np.abs(v_new - v)))
        if update < tol:
            return v_new, iteration
        if update > last_update:
            theta = 1.0
            for _ in range(8):
                theta *= 0.5
                v_try = v + theta * (v_new - v)
                v_try_h = np.fft.rfft(v_try)
                next_h = helm * (forcing_h + coupling(v_try, v_try_h))
                damped = float(np.max(np.abs(np.fft.irfft(next_h, n=n) - v_try)))
                if damped < last_update:
                    v_new, v_new_h, update = v_try, v_try_h, damped
                    break
            else:
                raise PicardDivergedError(
                    f"{what} iteration stopped contracting", update, iteration)
        v, v_h = v_new, v_new_h
        last_update = update
    raise PicardDivergedError(
        f"{what} iteration hit the iteration cap", last_update, max_iter)


def velocity_solve_arr(
    grid: PeriodicGrid, u: FloatArray, spec: ModelSpec
) -> tuple[FloatArray, int]:
    """Solve the implicit relation for v = u_t by damped Picard iteration.

    The fixed point is v = H[-(u^n)_z + ((u^{n-m}-1) v_z - m u^{n-m-1} u_z v)_z]
    with H the (1 - d_zz)^{-1} multiplier.  Every pointwise-constructed
    field passes through the dealias mask, so iterates stay band-limited
    and the converged v satisfies the defining relation to ~10x the
    update tolerance.  Returns (v, iterations).
    """
    _require_finite(u, "u")
    min_u = float(np.min(u))
    if min_u <= 0.0:
        raise NonPositiveUError(min_u)
    pn, pm = spec.exponents

    mask = grid._mask
    n = grid.n_points
    u_z = np.fft.irfft(grid._d1 * np.fft.rfft(u), n=n)
    a = u ** (pn - pm) - 1.0
    b = pm * u ** (pn - pm - 1.0) * u_z
    forcing_h = -grid._d1 * (mask * np.fft.rfft(u ** pn))

    def coupling(v, v_h):
        v_z = np.fft.irfft(grid._d1 * v_h, n=n)
        return grid._d1 * (mask * np.fft.rfft(a * v_z - b * v))

    return _damped_picard(grid, forcing_h, coupling, grid._helm * forcing_h,
                          spec.picard_tol, spec.picard_max_iter, "velocity")


def velocity_solve(u: RealField, spec: ModelSpec) -> RealField:
    v, _ = velocity_solve_arr(u.grid, u.values, spec)
    return RealField(u.grid, v)


def velocity_residual_arr(
    grid: PeriodicGrid, u: FloatArray, v: FloatArray, spec: ModelSpec
) -> float:
    """Sup-norm of v - (u^{n-m} v_z - m u^{n-m-1} u_z v)_z + (u^n)_z.

    Substitutes v into the defining relation along a composition path
    independent of the fixed-point iteration (no grouping through
    u^{n-m} - 1), so it acts as an oracle for velocity_solve.
    """
    pn, pm = spec.exponents
    mask = grid._mask
    u_z = np.fft.irfft(grid._d1 * np.fft.rfft(u), n=grid.n_points)
    v_z = np.fft.irfft(grid._d1 * np.fft.rfft(v), n=grid.n_points)
    flux_h = mask * np.fft.rfft(
        u ** (pn - pm) * v_z - pm * u ** (pn - pm - 1.0) * u_z * v)
    residual_h = (np.fft.rfft(v) - grid._d1 * flux_h
                  + grid._d1 * (mask * np.fft.rfft(u ** pn)))
    return float(np.max(np.abs(np.fft.irfft(residual_h, n=grid.n_points))))


def velocity_residual(u: RealField, v: RealField, spec: ModelSpec) -> float:
    _check_same_grid(u, v)
    return velocity_residual_arr(u.grid, u.values, v.values, spec)


def conduit_rhs_arr(grid: PeriodicGrid, u: FloatArray, spec: ModelSpec) -> FloatArray:
    v, _ = velocity_solve_arr(grid, u, spec)
    return v


# exact fluctuation form ----------------------------------------------


def eps_full_rhs_arr(
    grid: PeriodicGrid, h: FloatArray, epsilon: float, spec: ModelSpec
) -> tuple[FloatArray, int]:
    """h_t for u = 1 + eps*h, solved as a Picard fixed point in h_t.

    At eps = 0 the seed -2*H[h_z] already solves the relation and the
    iteration returns immediately.
    """
    _require_finite(h, "h")
    mask = grid._mask
    n = grid.n_points
    h_h = np.fft.rfft(h)
    h_zz = np.fft.irfft(grid._d2 * h_h, n=n)
    hv = np.fft.irfft(h_h, n=n)
    forcing_h = (-2.0 * grid._d1 * h_h
                 - epsilon * grid._d1 * (mask * np.fft.rfft(hv * hv)))

    def coupling(v, v_h):
        v_zz = np.fft.irfft(grid._d2 * v_h, n=n)
        return epsilon * (mask * np.fft.rfft(hv * v_zz - h_zz * v))

    return _damped_picard(grid, forcing_h, coupling, -2.0 * grid._helm_dz * h_h,
                          spec.picard_tol, spec.picard_max_iter,
                          "fluctuation velocity")


def eps_full_rhs(h: RealField, epsilon: float, spec: ModelSpec) -> RealField:
    v, _ = eps_full_rhs_arr(h.grid, h.values, epsilon, spec)
    return RealField(h.grid, v)


# small-amplitude cascade ---------------------------------------------


def cascade_rhs_arr(
    grid: PeriodicGrid, h0: FloatArray, h1: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """(h0_t, h1_t): free stream at leading order, forced stream above it."""
    _require_finite(h0, "h0")
    _require_finite(h1, "h1")
    mask = grid._mask
    h0_h = np.fft.rfft(h0)
    h0_h[0] = 0.0
    h1_h = np.fft.rfft(h1)
    h0v = np.fft.irfft(h0_h, n=grid.n_points)
    h0_z = np.fft.irfft(grid._d1 * h0_h, n=grid.n_points)
    h0_zz = np.fft.irfft(grid._d2 * h0_h, n=grid.n_points)
    dh0 = np.fft.irfft(grid._helm_dz * h0_h, n=grid.n_points)
    dh0_zz = np.fft.irfft(grid._helm_dz * grid._d2 * h0_h, n=grid.n_points)

    dt_h0_h = -2.0 * grid._helm_dz * h0_h
    forcing_h = mask * np.fft.rfft(
        -2.0 * h0v * h0_z + 2.0 * (h0_zz * dh0 - h0v * dh0_zz))
    dt_h1_h = -2.0 * grid._helm_dz * h1_h + grid._helm * forcing_h
    return (np.fft.irfft(dt_h0_h, n=grid.n_points),
            np.fft.irfft(dt_h1_h, n=grid.n_points))


def cascade_rhs(state: CascadeState) -> CascadeState:
    d0, d1 = cascade_rhs_arr(state.grid, state.h0.values, state.h1.values)
    return CascadeState(RealField(state.grid, d0), RealField(state.grid, d1))


def reconstruct_g(state: CascadeState, epsilon: float) -> RealField:
    """g = h0 + eps*h1, the cascade's prediction for the scaled fluctuation."""
    return RealField(state.grid, state.h0.values + epsilon * state.h1.values)
