"""Model right-hand sides against closed-form and cross-model oracles."""

import numpy as np
import pytest

from gmodel.equations import (
    CascadeState,
    ModelKind,
    ModelSpec,
    NonPositiveUError,
    PicardDivergedError,
    cascade_rhs,
    conduit_rhs_arr,
    eps_full_rhs_arr,
    gmodel_rhs,
    reconstruct_g,
    velocity_residual_arr,
    velocity_solve_arr,
)
from gmodel.spectral import (
    PeriodicGrid,
    dealiased_product,
    helmholtz_inverse,
    helmholtz_inverse_dz,
)

from conftest import band_limited_field


CONDUIT = ModelSpec(kind=ModelKind.CONDUIT)


# g-model --------------------------------------------------------------


def test_gmodel_single_mode_oracle(grid256):
    # For g = a cos z the quadratic bracket cancels exactly and
    #   rhs = a sin z + (a^2/5) sin 2z.
    z = grid256.nodes
    for a in (1.0, 0.3):
        rhs = gmodel_rhs(grid256.field(a * np.cos(z))).values
        expect = a * np.sin(z) + (a * a / 5.0) * np.sin(2 * z)
        assert np.max(np.abs(rhs - expect)) < 1e-14


def test_gmodel_linearization_is_flux_smoothed(grid256):
    # At amplitude eta the rhs is -2Ng + O(eta^2).
    z = grid256.nodes
    eta = 1e-8
    g = grid256.field(eta * np.cos(3 * z))
    rhs = gmodel_rhs(g).values
    linear = -2.0 * helmholtz_inverse_dz(g).values
    assert np.max(np.abs(rhs - linear)) < 1e-15 + 10 * eta ** 2


def test_gmodel_rhs_has_zero_mean(grid256):
    g = band_limited_field(grid256, seed=11, zero_mean=False)
    assert abs(np.mean(gmodel_rhs(g).values)) < 1e-16


def test_gmodel_quadratic_scaling(grid256):
    # rhs(a g) - a rhs_linear(g) scales like a^2
    g = band_limited_field(grid256, seed=12)
    def nonlinear_part(a):
        rhs = gmodel_rhs(g * a).values
        return rhs + 2.0 * a * helmholtz_inverse_dz(g).values
    r1 = np.max(np.abs(nonlinear_part(0.1)))
    r2 = np.max(np.abs(nonlinear_part(0.05)))
    assert r1 / r2 == pytest.approx(4.0, rel=1e-4)


def test_smoothing_identity_on_products(grid256):
    # N(f^2) = Q(2 f f') for band-limited f; both sides only involve
    # modes below the cutoff so dealiasing is inert.
    f = band_limited_field(grid256, seed=13)
    fz = np.fft.irfft(grid256._d1 * np.fft.rfft(f.values), n=grid256.n_points)
    lhs = helmholtz_inverse_dz(dealiased_product(f, f)).values
    rhs = helmholtz_inverse(
        dealiased_product(f * 2.0, grid256.field(fz))).values
    assert np.max(np.abs(lhs - rhs)) < 1e-13


# conduit and magma ----------------------------------------------------


def test_velocity_solve_satisfies_implicit_equation(grid256):
    u = grid256.field(1.0 + 0.3 * np.sin(grid256.nodes)).values
    v, iterations = velocity_solve_arr(grid256, u, CONDUIT)
    assert iterations < CONDUIT.picard_max_iter
    residual = velocity_residual_arr(grid256, u, v, CONDUIT)
    assert residual <= 10.0 * CONDUIT.picard_tol


def test_velocity_solve_linear_limit(grid256):
    # u = 1 + eps h: the velocity tends to -2Nh with O(eps) error.
    h = band_limited_field(grid256, seed=14)
    linear = -2.0 * helmholtz_inverse_dz(h).values
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        v, _ = velocity_solve_arr(grid256, 1.0 + eps * h.values, CONDUIT)
        errs.append(np.max(np.abs(v / eps - linear)))
    assert errs[0] / errs[1] == pytest.approx(10.0, rel=1e-2)
    assert errs[1] / errs[2] == pytest.approx(10.0, rel=1e-1)


def test_conduit_rhs_mean_free(grid256):
    u = 1.0 + 0.25 * np.cos(2 * grid256.nodes)
    du = conduit_rhs_arr(grid256, u, CONDUIT)
    assert abs(np.mean(du)) < 1e-15


def test_magma_21_matches_conduit_exactly(grid256):
    u = 1.0 + 0.3 * np.sin(grid256.nodes)
    magma = ModelSpec(kind=ModelKind.MAGMA, magma_n=2.0, magma_m=1.0)
    assert np.array_equal(conduit_rhs_arr(grid256, u, CONDUIT),
                          conduit_rhs_arr(grid256, u, magma))


def test_magma_other_exponents_differ(grid256):
    u = 1.0 + 0.3 * np.sin(grid256.nodes)
    magma = ModelSpec(kind=ModelKind.MAGMA, magma_n=3.0, magma_m=0.0)
    diff = np.max(np.abs(conduit_rhs_arr(grid256, u, CONDUIT)
                         - conduit_rhs_arr(grid256, u, magma)))
    assert diff > 1e-3


def test_positivity_guard(grid256):
    u = 1.0 + 1.5 * np.sin(grid256.nodes)  # dips below zero
    with pytest.raises(NonPositiveUError) as err:
        velocity_solve_arr(grid256, u, CONDUIT)
    assert err.value.min_u < 0.0


def test_picard_iteration_cap_raises(grid256):
    u = 1.0 + 0.3 * np.sin(grid256.nodes)
    strict = ModelSpec(kind=ModelKind.CONDUIT, picard_tol=1e-300,
                       picard_max_iter=2)
    with pytest.raises(PicardDivergedError) as err:
        velocity_solve_arr(grid256, u, strict)
    assert err.value.iterations >= 1
    assert np.isfinite(err.value.last_residual)


# exact epsilon rewrite ------------------------------------------------


def test_eps_full_matches_conduit_rescaled(grid256):
    # u = 1 + eps h obeys the conduit equation iff h obeys the
    # rewritten equation; the two rhs routes agree to roundoff.
    h = band_limited_field(grid256, seed=15)
    spec = ModelSpec(kind=ModelKind.EPS_FULL, epsilon=0.1)
    for eps in (0.1, 0.02):
        dh, _ = eps_full_rhs_arr(grid256, h.values, eps, spec)
        du = conduit_rhs_arr(grid256, 1.0 + eps * h.values, CONDUIT)
        assert np.max(np.abs(dh - du / eps)) < 1e-12


def test_eps_full_zero_amplitude_is_linear(grid256):
    h = band_limited_field(grid256, seed=16)
    spec = ModelSpec(kind=ModelKind.EPS_FULL, epsilon=0.05)
    dh, iterations = eps_full_rhs_arr(grid256, h.values, 0.0, spec)
    assert iterations <= 1
    linear = -2.0 * helmholtz_inverse_dz(h).values
    assert np.max(np.abs(dh - linear)) < 1e-14


# cascade --------------------------------------------------------------


def test_cascade_oracle_single_mode(grid256):
    # h0 = cos z, h1 = 0: leading order moves as sin z, first
    # correction is forced as sin(2z)/5.
    z = grid256.nodes
    state = CascadeState(grid256.field(np.cos(z)), grid256.zeros())
    out = cascade_rhs(state)
    assert np.max(np.abs(out.h0.values - np.sin(z))) < 1e-14
    assert np.max(np.abs(out.h1.values - np.sin(2 * z) / 5.0)) < 1e-14


def test_cascade_correction_is_independent_of_itself(grid256):
    # h1 enters its own equation only linearly through -2N h1.
    h0 = band_limited_field(grid256, seed=17)
    h1 = band_limited_field(grid256, seed=18)
    base = cascade_rhs(CascadeState(h0, grid256.zeros()))
    full = cascade_rhs(CascadeState(h0, h1))
    shift = full.h1.values - base.h1.values
    linear = -2.0 * helmholtz_inverse_dz(h1).values
    assert np.max(np.abs(shift - linear)) < 1e-13
    assert np.max(np.abs(full.h0.values - base.h0.values)) < 1e-15


def test_reconstruct_g(grid256):
    h0 = band_limited_field(grid256, seed=19)
    h1 = band_limited_field(grid256, seed=20)
    g = reconstruct_g(CascadeState(h0, h1), 0.25)
    assert np.allclose(g.values, h0.values + 0.25 * h1.values)


# spec validation ------------------------------------------------------


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(kind=ModelKind.EPS_FULL)  # epsilon required
    with pytest.raises(ValueError):
        ModelSpec(kind=ModelKind.EPS_FULL, epsilon=1.5)
    with pytest.raises(ValueError):
        ModelSpec(kind=ModelKind.MAGMA, magma_n=0.5)
    with pytest.raises(ValueError):
        ModelSpec(kind=ModelKind.MAGMA, magma_m=-1.0)
    spec = ModelSpec(kind=ModelKind.GMODEL)
    assert spec.exponents == (2.0, 1.0)
    tighter = spec.with_tolerance(1e-14)
    assert tighter.picard_tol == 1e-14
