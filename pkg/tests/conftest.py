import numpy as np
import pytest

from gmodel.spectral import PeriodicGrid, RealField


@pytest.fixture(scope="session")
def grid256() -> PeriodicGrid:
    return PeriodicGrid(256)


@pytest.fixture(scope="session")
def grid128() -> PeriodicGrid:
    return PeriodicGrid(128)


def band_limited_field(grid: PeriodicGrid, seed: int, *,
                       max_mode: int | None = None,
                       amplitude: float = 1.0,
                       zero_mean: bool = True) -> RealField:
    """Random real field supported on modes <= max_mode.

    Capped at half the dealias cutoff so quadratic products stay
    alias-free, which several oracle tests rely on.
    """
    rng = np.random.default_rng(seed)
    cutoff = grid.dealias_cutoff
    kmax = cutoff // 2 if max_mode is None else max_mode
    if kmax > cutoff:
        raise ValueError("max_mode exceeds the dealias cutoff")
    coeffs = np.zeros(grid.n_points // 2 + 1, dtype=complex)
    mags = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    coeffs[1:kmax + 1] = mags / np.arange(1, kmax + 1)
    if not zero_mean:
        coeffs[0] = rng.standard_normal()
    values = np.fft.irfft(coeffs * grid.n_points, n=grid.n_points)
    scale = amplitude / max(np.max(np.abs(values)), 1e-30)
    return grid.field(values * scale)
