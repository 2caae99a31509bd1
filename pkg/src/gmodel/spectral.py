"""Fourier collocation on the 2*pi-periodic interval.

Fields live on the equispaced grid z_j = 2*pi*j/n and are represented by
their real samples.  Spectral coefficients follow the convention

    f(z) = sum_k  fhat_k  exp(i k z),        k = -n/2 .. n/2 - 1,

so fhat_k = (1/n) * FFT[f]_k.  All multiplier operators act diagonally on
the rfft half-spectrum; quadratic products are dealiased by the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]

DOMAIN_LENGTH = 2.0 * np.pi


class GridMismatchError(ValueError):
    """Two fields from different grids were combined."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Collocation grid on [0, 2*pi) with cached multiplier symbols.

    n_points must be even and at least 8.  The dealias cutoff is
    floor(n/3); modes strictly above it are discarded whenever a
    quadratic product is formed.
    """

    n_points: int
    nodes: FloatArray = field(init=False, repr=False, compare=False)
    wavenumbers: FloatArray = field(init=False, repr=False, compare=False)
    dealias_cutoff: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        n = self.n_points
        if n < 8 or n % 2 != 0:
            raise ValueError(f"n_points must be even and >= 8, got {n}")
        object.__setattr__(self, "nodes", DOMAIN_LENGTH * np.arange(n) / n)
        k = np.arange(n // 2 + 1, dtype=np.float64)  # rfft wavenumbers
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "dealias_cutoff", n // 3)

        # multiplier symbols on the rfft half-spectrum
        helm = 1.0 / (1.0 + k * k)
        helm_dz = 1j * k * helm
        helm_dz[-1] = 0.0  # Nyquist carries no sign for odd symbols
        d1 = 1j * k
        d1[-1] = 0.0
        d2 = -(k * k) + 0j
        d3 = d1 * d2
        mask = np.ones(n // 2 + 1)
        mask[self.dealias_cutoff + 1 :] = 0.0
        object.__setattr__(self, "_helm", helm.astype(np.complex128))
        object.__setattr__(self, "_helm_dz", helm_dz)
        object.__setattr__(self, "_d1", d1)
        object.__setattr__(self, "_d2", d2)
        object.__setattr__(self, "_d3", d3)
        object.__setattr__(self, "_mask", mask)

    @property
    def spacing(self) -> float:
        return DOMAIN_LENGTH / self.n_points

    def deriv_symbol(self, order: int) -> ComplexArray:
        if order == 1:
            return self._d1
        if order == 2:
            return self._d2
        if order == 3:
            return self._d3
        k = self.wavenumbers
        sym = (1j * k) ** order
        if order % 2 == 1:
            sym[-1] = 0.0
        return sym

    # transforms -------------------------------------------------------

    def to_spectral(self, values: FloatArray) -> ComplexArray:
        """Normalized half-spectrum: coefficient of exp(ikz) for k >= 0."""
        return np.fft.rfft(values) / self.n_points

    def from_spectral(self, coeffs: ComplexArray) -> FloatArray:
        return np.fft.irfft(coeffs * self.n_points, n=self.n_points)

    def field(self, values: npt.ArrayLike) -> "RealField":
        return RealField(self, np.asarray(values, dtype=np.float64))

    def field_from_function(self, fn: Callable[[FloatArray], npt.ArrayLike]) -> "RealField":
        return self.field(np.broadcast_to(fn(self.nodes), (self.n_points,)).copy())

    def zeros(self) -> "RealField":
        return RealField(self, np.zeros(self.n_points))


@dataclass(frozen=True)
class Spectrum:
    """Two-sided normalized coefficients in numpy fft ordering."""

    grid: PeriodicGrid
    coefficients: ComplexArray

    @property
    def wavenumbers(self) -> npt.NDArray[np.int64]:
        n = self.grid.n_points
        return (np.fft.fftfreq(n) * n).astype(np.int64)

    def coefficient(self, k: int) -> complex:
        n = self.grid.n_points
        if not -n // 2 <= k < n // 2:
            raise ValueError(f"wavenumber {k} outside resolved range for n={n}")
        return complex(self.coefficients[k % n])


class RealField:
    """Real samples of a periodic function on a PeriodicGrid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: PeriodicGrid, values: FloatArray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n_points,):
            raise ValueError(
                f"values shape {values.shape} does not match grid ({grid.n_points},)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field samples must be finite")
        self.grid = grid
        self.values = values

    def spectrum(self) -> Spectrum:
        return Spectrum(self.grid, np.fft.fft(self.values) / self.grid.n_points)

    def __add__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"RealField(n={self.grid.n_points}, sup={np.max(np.abs(self.values)):.3g})"


def _check_same_grid(f: RealField, g: RealField) -> None:
    if f.grid.n_points != g.grid.n_points:
        raise GridMismatchError(
            f"grids differ: {f.grid.n_points} vs {g.grid.n_points}"
        )


# operator kernels on raw sample arrays --------------------------------
#
# The array-level functions are what the time steppers call in their
# inner loops; the RealField wrappers below are the public surface.


def helmholtz_inverse_arr(grid: PeriodicGrid, values: FloatArray) -> FloatArray:
    return np.fft.irfft(grid._helm * np.fft.rfft(values), n=grid.n_points)


def helmholtz_inverse_dz_arr(grid: PeriodicGrid, values: FloatArray) -> FloatArray:
    return np.fft.irfft(grid._helm_dz * np.fft.rfft(values), n=grid.n_points)


def derivative_arr(grid: PeriodicGrid, values: FloatArray, order: int = 1) -> FloatArray:
    return np.fft.irfft(grid.deriv_symbol(order) * np.fft.rfft(values), n=grid.n_points)


def dealiased_product_arr(grid: PeriodicGrid, a: FloatArray, b: FloatArray) -> FloatArray:
    return np.fft.irfft(grid._mask * np.fft.rfft(a * b), n=grid.n_points)


def project_zero_mean_arr(values: FloatArray) -> FloatArray:
    return values - values.mean()


def helmholtz_inverse(f: RealField) -> RealField:
    """Smoothing multiplier 1/(1+k^2), i.e. (1 - d_zz)^{-1}."""
    return RealField(f.grid, helmholtz_inverse_arr(f.grid, f.values))


def helmholtz_inverse_dz(f: RealField) -> RealField:
    """Multiplier ik/(1+k^2): derivative of the Helmholtz inverse."""
    return RealField(f.grid, helmholtz_inverse_dz_arr(f.grid, f.values))


def derivative(f: RealField, order: int = 1) -> RealField:
    if order < 1:
        raise ValueError("derivative order must be >= 1")
    return RealField(f.grid, derivative_arr(f.grid, f.values, order))


def dealiased_product(f: RealField, g: RealField) -> RealField:
    """Pointwise product followed by the 2/3-rule spectral truncation.

    Exact whenever the factors' combined bandwidth stays at or below
    the cutoff; otherwise the aliased tail is discarded.
    """
    _check_same_grid(f, g)
    return RealField(f.grid, dealiased_product_arr(f.grid, f.values, g.values))


def mean(f: RealField) -> float:
    return float(f.values.mean())


def sup_norm(f: RealField) -> float:
    return float(np.max(np.abs(f.values)))


def sobolev_norm(f: RealField, s: float) -> float:
    """H^s norm: sqrt(sum over all k of (1+k^2)^s |fhat_k|^2)."""
    if s < 0:
        raise ValueError("Sobolev exponent must be nonnegative")
    n = f.grid.n_points
    coeffs = np.fft.rfft(f.values) / n
    k = f.grid.wavenumbers
    weights = (1.0 + k * k) ** s
    power = np.abs(coeffs) ** 2
    # interior modes appear at +k and -k; mode 0 and the Nyquist mode once
    total = weights[0] * power[0] + weights[-1] * power[-1]
    total += 2.0 * np.sum(weights[1:-1] * power[1:-1])
    return float(np.sqrt(total))


def spectral_tail_fraction(f: RealField) -> float:
    """Fraction of fluctuation energy in the upper half of the kept band.

    Rises toward 1 as the resolved spectrum saturates; ~0 for smooth
    well-resolved fields.
    """
    n = f.grid.n_points
    coeffs = np.fft.rfft(f.values) / n
    power = np.abs(coeffs[1:]) ** 2  # drop the mean
    total = float(np.sum(power))
    if total < 1e-28:
        return 0.0
    cutoff = f.grid.dealias_cutoff
    lo = cutoff // 2  # modes (cutoff/2, cutoff] of the kept band
    tail = float(np.sum(power[lo : cutoff]))
    return tail / total
