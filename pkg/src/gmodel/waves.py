"""Traveling-wave profiles by Galerkin truncation and bordered Newton.

A profile with m-fold symmetry is an even zero-mean series

    phi(xi) = sum_{k=1..K} f_k cos(m k xi),      xi = z - c t,

and a steady pair (c, phi) annihilates the residual

    R[c, phi] = c phi' - 2 D phi - D(phi^2) + 2 H(phi'' D phi - phi D phi''),

where H is the (1 - d_xx)^{-1} multiplier and D = d_x H.  R maps even
series to odd ones, so the unknowns (f_1..f_K, c) are matched by the K
sine coefficients of R plus an amplitude pin f_1 = s.  At phi = 0 the
linearization is diagonal with entries j (c_j - c), c_j = 2/(1+j^2):
mode n crosses zero exactly at the onset speed c_n, with d/dc = -n.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .spectral import FloatArray, PeriodicGrid, RealField


class NewtonDivergedError(RuntimeError):
    """The bordered Newton iteration failed to converge."""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(f"{message} (residual {last_residual:.3e} after "
                         f"{iterations} iterations)")
        self.last_residual = last_residual
        self.iterations = iterations


class SingularJacobianError(RuntimeError):
    """The bordered Jacobian is numerically singular."""


def bifurcation_speed(n: int) -> float:
    """Onset speed of the n-fold branch: c_n = 2/(1+n^2)."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    return 2.0 / (1.0 + n * n)


@dataclass(frozen=True)
class CosineSeries:
    """Even m-fold profile, stored as coefficients of cos(m k xi)."""

    m_fold: int
    coeffs: FloatArray

    def __post_init__(self) -> None:
        if self.m_fold < 1:
            raise ValueError("m_fold must be >= 1")
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d array")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def truncation(self) -> int:
        return self.coeffs.size

    @property
    def amplitude(self) -> float:
        """First coefficient f_1, the branch parameter."""
        return float(self.coeffs[0])

    def padded(self, K: int) -> "CosineSeries":
        if K < self.truncation:
            raise ValueError("cannot pad to a smaller truncation")
        out = np.zeros(K)
        out[: self.truncation] = self.coeffs
        return CosineSeries(self.m_fold, out)

    def translated_half_period(self) -> "CosineSeries":
        """xi -> xi + pi/m, i.e. f_k -> (-1)^k f_k."""
        signs = np.where(np.arange(1, self.truncation + 1) % 2 == 0, 1.0, -1.0)
        return CosineSeries(self.m_fold, self.coeffs * signs)

    def sample_on(self, grid: PeriodicGrid) -> RealField:
        top = self.m_fold * self.truncation
        if top > grid.n_points // 2 - 1:
            raise ValueError(
                f"series needs mode {top}, grid resolves {grid.n_points // 2 - 1}")
        half = np.zeros(grid.n_points // 2 + 1, dtype=np.complex128)
        idx = self.m_fold * np.arange(1, self.truncation + 1)
        half[idx] = 0.5 * self.coeffs
        return RealField(grid, grid.from_spectral(half))


def _evaluation_grid(m: int, K: int) -> PeriodicGrid:
    # quadratic products of modes <= mK stay alias-clean below n - 2mK,
    # so n >= 3mK + 2 keeps every retained mode exact
    need = 3 * m * K + 2
    n = 64
    while n < need:
        n *= 2
    return PeriodicGrid(n)


def _sine_coeffs(grid: PeriodicGrid, spectral_half: np.ndarray,
                 m: int, K: int) -> FloatArray:
    idx = m * np.arange(1, K + 1)
    return -2.0 * np.imag(spectral_half[idx]) / grid.n_points


def _cosine_leak(grid: PeriodicGrid, spectral_half: np.ndarray,
                 m: int, K: int) -> float:
    idx = m * np.arange(1, K + 1)
    return float(np.max(np.abs(2.0 * np.real(spectral_half[idx]) / grid.n_points)))


def _phi_fields(grid: PeriodicGrid, series: CosineSeries):
    n = grid.n_points
    phi_h = np.fft.rfft(series.sample_on(grid).values)
    phi = np.fft.irfft(phi_h, n=n)
    dphi = np.fft.irfft(grid._helm_dz * phi_h, n=n)
    phi_xx = np.fft.irfft(grid._d2 * phi_h, n=n)
    dphi_xx = np.fft.irfft(grid._helm_dz * grid._d2 * phi_h, n=n)
    return phi_h, phi, dphi, phi_xx, dphi_xx


def wave_residual(c: float, series: CosineSeries,
                  n_modes: int | None = None) -> FloatArray:
    """Sine coefficients (modes m..m*K) of the steady residual R[c, phi].

    Evaluated pseudospectrally on a grid wide enough that every
    retained coefficient is exact; n_modes widens the truncation for
    re-checks at higher K.
    """
    K = n_modes or series.truncation
    if K < series.truncation:
        raise ValueError("n_modes must not truncate the series")
    work = series.padded(K) if K > series.truncation else series
    grid = _evaluation_grid(series.m_fold, K)
    phi_h, phi, dphi, phi_xx, dphi_xx = _phi_fields(grid, work)
    square_h = grid._mask * np.fft.rfft(phi * phi)
    bracket_h = grid._mask * np.fft.rfft(phi_xx * dphi - phi * dphi_xx)
    r_h = (c * grid._d1 * phi_h - 2.0 * grid._helm_dz * phi_h
           - grid._helm_dz * square_h + 2.0 * grid._helm * bracket_h)
    return _sine_coeffs(grid, r_h, series.m_fold, K)


def wave_residual_parity_leak(c: float, series: CosineSeries) -> float:
    """Largest cosine coefficient of R[c, phi]; ~roundoff by parity."""
    K = series.truncation
    grid = _evaluation_grid(series.m_fold, K)
    phi_h, phi, dphi, phi_xx, dphi_xx = _phi_fields(grid, series)
    square_h = grid._mask * np.fft.rfft(phi * phi)
    bracket_h = grid._mask * np.fft.rfft(phi_xx * dphi - phi * dphi_xx)
    r_h = (c * grid._d1 * phi_h - 2.0 * grid._helm_dz * phi_h
           - grid._helm_dz * square_h + 2.0 * grid._helm * bracket_h)
    return _cosine_leak(grid, r_h, series.m_fold, K)


def linearized_wave_residual(c: float, series: CosineSeries,
                             direction: CosineSeries) -> FloatArray:
    """Sine coefficients of the derivative of R at (c, phi) along h.

    R is quadratic in phi, so this is exactly
    c h' - 2 D h - 2 D(phi h) + 2 H(phi'' D h - phi D h'' + h'' D phi - h D phi'').
    """
    if direction.m_fold != series.m_fold:
        raise ValueError("direction must share the profile's symmetry")
    K = max(series.truncation, direction.truncation)
    work = series.padded(K)
    h_series = direction.padded(K)
    grid = _evaluation_grid(series.m_fold, K)
    n = grid.n_points
    _, phi, dphi, phi_xx, dphi_xx = _phi_fields(grid, work)
    h_h = np.fft.rfft(h_series.sample_on(grid).values)
    h = np.fft.irfft(h_h, n=n)
    dh = np.fft.irfft(grid._helm_dz * h_h, n=n)
    h_xx = np.fft.irfft(grid._d2 * h_h, n=n)
    dh_xx = np.fft.irfft(grid._helm_dz * grid._d2 * h_h, n=n)

    cross_h = grid._mask * np.fft.rfft(phi * h)
    bracket_h = grid._mask * np.fft.rfft(
        phi_xx * dh - phi * dh_xx + h_xx * dphi - h * dphi_xx)
    out_h = (c * grid._d1 * h_h - 2.0 * grid._helm_dz * h_h
             - 2.0 * grid._helm_dz * cross_h + 2.0 * grid._helm * bracket_h)
    return _sine_coeffs(grid, out_h, series.m_fold, K)


@dataclass(frozen=True)
class KernelReport:
    """Linearization at (c_n, 0) over modes 1..K, mode indices 1-based."""

    n: int
    K: int
    diagonal: FloatArray
    kernel_modes: tuple[int, ...]
    smallest_nonzero: float
    transversality: float
    max_off_diagonal: float


def kernel_check(n: int, K: int, tol: float = 1e-14) -> KernelReport:
    """Assemble the phi = 0 linearization at speed c_n mode by mode.

    The operator is diagonal there: direction cos(j xi) returns only a
    sin(j xi) component, with coefficient j (c_j - c_n).  Exactly one
    entry (mode n) vanishes for n <= K; the c-derivative of that entry
    is -n, the transversality of the crossing.
    """
    if not 1 <= n <= K:
        raise ValueError(f"need 1 <= n <= K, got n={n}, K={K}")
    c_n = bifurcation_speed(n)
    zero = CosineSeries(1, np.zeros(K))
    diagonal = np.zeros(K)
    max_off = 0.0
    for j in range(1, K + 1):
        e_j = np.zeros(K)
        e_j[j - 1] = 1.0
        column = linearized_wave_residual(c_n, zero, CosineSeries(1, e_j))
        diagonal[j - 1] = column[j - 1]
        column[j - 1] = 0.0
        max_off = max(max_off, float(np.max(np.abs(column))))

    kernel_modes = tuple(int(j + 1) for j in np.flatnonzero(np.abs(diagonal) <= tol))
    nonzero = np.abs(diagonal)[np.abs(diagonal) > tol]
    smallest = float(np.min(nonzero)) if nonzero.size else np.nan

    # the linearization is affine in c, so a centered difference in c of
    # the kernel-mode entry is exact
    e_n = np.zeros(K)
    e_n[n - 1] = 1.0
    dirn = CosineSeries(1, e_n)
    dc = 0.5
    up = linearized_wave_residual(c_n + dc, zero, dirn)[n - 1]
    down = linearized_wave_residual(c_n - dc, zero, dirn)[n - 1]
    transversality = (up - down) / (2.0 * dc)

    return KernelReport(n=n, K=K, diagonal=diagonal,
                        kernel_modes=kernel_modes, smallest_nonzero=smallest,
                        transversality=float(transversality),
                        max_off_diagonal=max_off)


@dataclass(frozen=True)
class WaveBranchPoint:
    s: float
    c: float
    series: CosineSeries
    residual_sup: float
    newton_iters: int


@dataclass(frozen=True)
class ContinuationConfig:
    m_fold: int
    s_max: float
    ds: float
    K: int = 64
    newton_tol: float = 1e-12
    newton_max_iter: int = 25
    max_halvings: int = 6
    condition_limit: float = 1e14

    def __post_init__(self) -> None:
        if self.m_fold < 1:
            raise ValueError("m_fold must be >= 1")
        if self.s_max <= 0.0 or self.ds <= 0.0:
            raise ValueError("s_max and ds must be positive")
        if self.ds > self.s_max:
            raise ValueError("ds must not exceed s_max")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")


def newton_solve(
    m: int,
    K: int,
    s: float,
    c0: float | None = None,
    phi0: CosineSeries | None = None,
    newton_tol: float = 1e-12,
    max_iter: int = 25,
    condition_limit: float = 1e14,
) -> WaveBranchPoint:
    """Solve the bordered system: K sine equations plus f_1 = s.

    Unknowns are (f_1..f_K, c).  The amplitude constraint is linear and
    is enforced exactly by projection each iteration; convergence is
    declared when the sup-norm of the full residual drops to newton_tol.
    """
    if s == 0.0:
        raise ValueError("amplitude s must be nonzero (s = 0 is the rest state)")
    if phi0 is not None and phi0.m_fold != m:
        raise ValueError("seed profile symmetry differs from m")
    coeffs = np.zeros(K)
    if phi0 is not None:
        coeffs[: min(K, phi0.truncation)] = phi0.coeffs[:K]
    coeffs[0] = s
    c = float(c0) if c0 is not None else bifurcation_speed(m)

    last_residual = np.inf
    for iteration in range(1, max_iter + 1):
        series = CosineSeries(m, coeffs)
        r_modes = wave_residual(c, series)
        residual_sup = float(np.max(np.abs(r_modes)))  # f_1 - s pinned to 0
        if not np.isfinite(residual_sup):
            raise NewtonDivergedError("residual became non-finite",
                                      last_residual, iteration)
        if residual_sup <= newton_tol:
            return WaveBranchPoint(s=s, c=c, series=series,
                                   residual_sup=residual_sup,
                                   newton_iters=iteration - 1)
        last_residual = residual_sup

        jac = np.zeros((K + 1, K + 1))
        for j in range(K):
            e_j = np.zeros(K)
            e_j[j] = 1.0
            jac[:K, j] = linearized_wave_residual(c, series, CosineSeries(m, e_j))
        # d/dc of the residual is phi', whose sine coefficients are -mk f_k
        jac[:K, K] = -m * np.arange(1, K + 1) * coeffs
        jac[K, 0] = 1.0

        if np.linalg.cond(jac) > condition_limit:
            raise SingularJacobianError(
                f"bordered Jacobian condition exceeds {condition_limit:.1e} "
                f"at s={s:.3e}")
        rhs = np.concatenate([r_modes, [0.0]])
        delta = np.linalg.solve(jac, -rhs)
        coeffs = coeffs + delta[:K]
        coeffs[0] = s
        c = c + float(delta[K])

    raise NewtonDivergedError("iteration cap reached", last_residual, max_iter)


@dataclass
class Branch:
    """Converged points at increasing amplitude, plus why we stopped."""

    points: list[WaveBranchPoint]
    termination: str
    config: ContinuationConfig

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def continue_branch(cfg: ContinuationConfig) -> Branch:
    """Natural-parameter continuation in the amplitude s.

    Starts from the onset seed (c_m, s cos(m xi)) and marches s in
    steps of ds up to s_max, seeding each solve with the previous
    point.  A failed solve halves ds (up to max_halvings in total)
    before the partial branch is returned.
    """
    points: list[WaveBranchPoint] = []
    s_prev = 0.0
    c_prev: float | None = None
    phi_prev: CosineSeries | None = None
    ds = cfg.ds
    halvings = 0

    while s_prev < cfg.s_max - 1e-15 * cfg.s_max:
        s = min(s_prev + ds, cfg.s_max)
        try:
            point = newton_solve(
                cfg.m_fold, cfg.K, s, c0=c_prev, phi0=phi_prev,
                newton_tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
                condition_limit=cfg.condition_limit)
        except (NewtonDivergedError, SingularJacobianError) as exc:
            halvings += 1
            if halvings > cfg.max_halvings:
                return Branch(points, f"newton_failed: {exc}", cfg)
            ds *= 0.5
            continue
        points.append(point)
        s_prev = s
        c_prev = point.c
        phi_prev = point.series
    return Branch(points, "reached_s_max", cfg)
