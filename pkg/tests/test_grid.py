import numpy as np
import pytest

from thermogas.grid import (
    RealField,
    SpectralField,
    dealias,
    field_norm,
    forward,
    gradient,
    inverse,
    laplacian,
    make_grid,
    spectral_derivative,
)


def test_make_grid_1d_lattice():
    grid = make_grid(1, 8, 2 * np.pi)
    assert sorted(grid.modes.astype(int)) == list(range(-4, 4))
    # 2*pi/L = 1, so wavenumbers coincide with integer modes
    assert np.allclose(sorted(grid.k_axes[0].ravel()), np.arange(-4, 4))


def test_make_grid_3d_extent():
    grid = make_grid(3, 32, 2 * np.pi)
    assert grid.size == 32768
    assert np.isclose(grid.k_abs.max(), np.sqrt(3) * 16)
    assert int(np.sum(grid.k_sq == 0)) == 1
    nonzero = grid.k_abs[grid.k_sq > 0]
    assert np.isclose(nonzero.min(), 2 * np.pi / grid.L)


@pytest.mark.parametrize(
    "d,n,L", [(1, 12, 1.0), (1, 7, 1.0), (1, 4, 1.0), (2, 16, -1.0), (4, 16, 1.0)]
)
def test_make_grid_rejects_bad_arguments(d, n, L):
    with pytest.raises(ValueError):
        make_grid(d, n, L)


def test_transform_constant_field():
    grid = make_grid(2, 16, 3.0)
    c = forward(RealField(grid, np.ones(grid.shape)))
    assert np.isclose(c.coefficients[0, 0], 1.0)
    rest = c.coefficients.copy()
    rest[0, 0] = 0.0
    assert np.abs(rest).max() < 1e-15


def test_transform_cosine_mode():
    grid = make_grid(1, 16, 2 * np.pi)
    c = forward(RealField(grid, np.cos(grid.x)))
    assert np.isclose(c.coefficients[1], 0.5)
    assert np.isclose(c.coefficients[-1], 0.5)


@pytest.mark.parametrize("d,n", [(1, 64), (2, 32), (3, 16)])
def test_round_trip(d, n):
    grid = make_grid(d, n, 1.7)
    rng = np.random.default_rng(3)
    f = RealField(grid, rng.standard_normal(grid.shape))
    back = inverse(forward(f))
    assert np.abs(back.values - f.values).max() <= 1e-12 * np.abs(f.values).max()


def test_hermitian_defect_zero_for_real_fields():
    grid = make_grid(2, 16, 1.0)
    f = RealField(grid, np.random.default_rng(0).standard_normal(grid.shape))
    assert forward(f).hermitian_defect() < 1e-13


def test_inverse_rejects_non_hermitian():
    grid = make_grid(1, 8, 1.0)
    coef = np.zeros(8, dtype=complex)
    coef[1] = 1.0  # no conjugate partner
    with pytest.raises(ValueError):
        inverse(SpectralField(grid, coef))


def test_laplacian_eigenfunction():
    grid = make_grid(1, 32, 2 * np.pi)
    f = forward(RealField(grid, np.cos(grid.x)))
    lap = inverse(laplacian(f))
    assert np.allclose(lap.values, -np.cos(grid.x), atol=1e-12)


def test_gradient_of_sin_2x():
    grid = make_grid(3, 16, 2 * np.pi)
    x = grid.x.reshape(-1, 1, 1)
    f = forward(RealField(grid, np.sin(2 * x) * np.ones(grid.shape)))
    gx, gy, gz = (inverse(g) for g in gradient(f))
    assert np.allclose(gx.values, 2 * np.cos(2 * x) * np.ones(grid.shape), atol=1e-12)
    assert np.abs(gy.values).max() < 1e-12
    assert np.abs(gz.values).max() < 1e-12


def _fd_laplacian_gap(n):
    # centered second differences on a band-limited field, |m| <= 4
    grid = make_grid(1, n, 2 * np.pi)
    rng = np.random.default_rng(11)
    coef = np.zeros(n, dtype=complex)
    for m in range(1, 5):
        z = rng.normal() + 1j * rng.normal()
        coef[m] = z
        coef[-m] = np.conj(z)
    f = inverse(SpectralField(grid, coef))
    lap = inverse(laplacian(forward(f))).values
    h = grid.L / grid.n
    fd = (np.roll(f.values, -1) - 2 * f.values + np.roll(f.values, 1)) / h ** 2
    return np.abs(lap - fd).max() / np.abs(lap).max()


def test_laplacian_against_finite_differences():
    # the stencil symbol (2 - 2cos(mh))/h^2 trails -m^2 by (mh)^2/12, so the
    # oracle itself caps the agreement at ~1.3e-2 for m = 4 on n = 64; assert
    # the oracle-computed bound and second-order shrinkage under refinement
    gap64 = _fd_laplacian_gap(64)
    gap128 = _fd_laplacian_gap(128)
    bound = (4 * 2 * np.pi / 64) ** 2 / 12
    assert gap64 <= 1.2 * bound
    assert 0.2 <= gap128 / gap64 <= 0.3


def test_spectral_derivative_dispatch():
    grid = make_grid(1, 16, 2 * np.pi)
    f = forward(RealField(grid, np.cos(grid.x)))
    assert len(spectral_derivative(f, "gradient")) == 1
    assert spectral_derivative(f, "laplacian").coefficients.shape == grid.shape
    with pytest.raises(ValueError):
        spectral_derivative(f, "hessian")


def test_dealias_passes_low_band_and_kills_high_mode():
    grid = make_grid(1, 32, 2 * np.pi)
    low = np.zeros(32, dtype=complex)
    low[5] = low[-5] = 1.0  # 5 <= 32/3
    assert np.array_equal(dealias(SpectralField(grid, low)).coefficients, low)
    high = np.zeros(32, dtype=complex)
    high[15] = high[-15] = 1.0  # m = n/2 - 1 is outside the band
    assert np.abs(dealias(SpectralField(grid, high)).coefficients).max() == 0.0


def test_dealias_idempotent():
    grid = make_grid(2, 16, 1.0)
    g = forward(RealField(grid, np.random.default_rng(5).standard_normal(grid.shape)))
    once = dealias(g)
    twice = dealias(once)
    assert np.array_equal(once.coefficients, twice.coefficients)


def test_derivative_commutes_with_dealias_on_band_limited_input():
    grid = make_grid(1, 32, 2 * np.pi)
    coef = np.zeros(32, dtype=complex)
    coef[3] = coef[-3] = 0.7
    g = SpectralField(grid, coef)
    a = dealias(laplacian(g)).coefficients
    b = laplacian(dealias(g)).coefficients
    assert np.array_equal(a, b)


def test_lp_norm_constant():
    grid = make_grid(1, 16, 2 * np.pi)
    f = RealField(grid, np.ones(16))
    assert np.isclose(field_norm(f, "lp", p=2), np.sqrt(2 * np.pi))
    assert np.isclose(field_norm(f, "lp", p=np.inf), 1.0)


def test_hs_dot_cosine():
    grid = make_grid(1, 64, 2 * np.pi)
    f = RealField(grid, np.cos(grid.x))
    # |k| = 1, so the seminorm equals the L2 norm sqrt(pi) for every s
    assert np.isclose(field_norm(f, "hs_dot", s=1.0), np.sqrt(np.pi))
    assert np.isclose(field_norm(f, "hs_dot", s=0.0), field_norm(f, "lp", p=2))


def test_zero_field_all_norms():
    grid = make_grid(2, 16, 1.0)
    f = RealField(grid, np.zeros(grid.shape))
    for kind, kw in (("lp", {"p": 1}), ("lp", {"p": np.inf}), ("hs", {"s": 2.0}),
                     ("hs_dot", {"s": 1.5})):
        assert field_norm(f, kind, **kw) == 0.0


def test_norm_rejects_bad_p_and_nonfinite():
    grid = make_grid(1, 8, 1.0)
    f = RealField(grid, np.ones(8))
    with pytest.raises(ValueError):
        field_norm(f, "lp", p=0.5)
    with pytest.raises(ValueError):
        RealField(grid, np.full(8, np.nan))


def test_parseval():
    grid = make_grid(2, 32, 2.5)
    rng = np.random.default_rng(7)
    f = RealField(grid, rng.standard_normal(grid.shape))
    physical = field_norm(f, "lp", p=2)
    coef = forward(f).coefficients
    spectral = np.sqrt(grid.volume * np.sum(np.abs(coef) ** 2))
    assert abs(physical ** 2 - spectral ** 2) <= 1e-10 * physical ** 2


def test_hs_monotone_in_s():
    grid = make_grid(1, 64, 2 * np.pi)
    rng = np.random.default_rng(9)
    f = RealField(grid, rng.standard_normal(64))
    norms = [field_norm(f, "hs", s=s) for s in (0.0, 1.0, 2.0)]
    assert norms[0] >= field_norm(f, "lp", p=2) - 1e-12
    assert norms[0] <= norms[1] <= norms[2]
