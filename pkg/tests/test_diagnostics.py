import numpy as np
import pytest

from thermogas.diagnostics import (
    energy_functional_X,
    energy_report,
    l2_energy_identity,
    positivity_minima,
    scaling_test,
    total_mass,
)
from thermogas.grid import RealField, make_grid
from thermogas.initial import random_band_field, rng_for, single_mode_state, zero_state
from thermogas.integrators import simulate
from thermogas.model import AState, ModelParams, PrimitiveState, change_variables

GRID = make_grid(1, 64, 2 * np.pi)
PARAMS = ModelParams(1.0, 1.0, 1.0, "tanh", 0.3)


def _small_run(T=0.5, dt=0.01, stride=1, seed=7, amp=5e-2, band=3, params=PARAMS):
    fa = random_band_field(GRID, rng_for(seed, 1), band, amp)
    ft = random_band_field(GRID, rng_for(seed, 2), band, amp)
    return simulate(AState(fa, ft), params, T=T, dt=dt, snapshot_stride=stride)


def test_total_mass_constant_density():
    grid = make_grid(3, 8, 2 * np.pi)
    state = PrimitiveState(
        RealField(grid, np.ones(grid.shape)), RealField(grid, np.ones(grid.shape))
    )
    assert np.isclose(total_mass(state), (2 * np.pi) ** 3)
    assert positivity_minima(state) == (1.0, 1.0)


def test_mass_conserved_along_run():
    traj = _small_run()
    mass = traj.norms["mass"]
    assert np.abs(mass - mass[0]).max() <= 1e-12 * mass[0]
    assert traj.norms["min_theta"].min() > 0.0


def test_x_functional_zero_trajectory():
    traj = simulate(zero_state(GRID), PARAMS, T=0.3, dt=0.1)
    X = energy_functional_X(traj)
    assert np.abs(X).max() == 0.0


def test_x_functional_monotone():
    X = energy_functional_X(_small_run())
    assert np.all(np.diff(X) >= -1e-15)


def test_x_functional_needs_snapshots():
    traj = simulate(zero_state(GRID), PARAMS, T=0.2, dt=0.1, snapshot_stride=2)
    with pytest.raises(ValueError, match="3 snapshots"):
        energy_functional_X(traj)


def test_x_functional_bounded_for_small_data():
    # the slowest pair mode decays at rate ~0.76, so the dissipation integral
    # has essentially plateaued by t = 1; no growth beyond 5% afterwards
    traj = _small_run(T=4.0, dt=0.01, stride=10, amp=1e-2)
    X = energy_functional_X(traj)
    mid = int(np.argmin(np.abs(traj.times - 1.0)))
    assert X[-1] <= 1.05 * X[mid]


def test_l2_identity_zero_trajectory():
    traj = simulate(zero_state(GRID), PARAMS, T=0.3, dt=0.1)
    ident = l2_energy_identity(traj, PARAMS)
    assert np.abs(ident["residual1"]).max() == 0.0
    assert np.abs(ident["residual2"]).max() == 0.0


def test_l2_identity_residual_second_order():
    peaks = []
    for dt in (2.5e-3, 1.25e-3):
        ident = l2_energy_identity(_small_run(T=0.25, dt=dt), PARAMS)
        peaks.append(
            (ident["residual1"][1:-1].max(), ident["residual2"][1:-1].max())
        )
    assert 3.0 <= peaks[0][0] / peaks[1][0] <= 5.0
    assert 3.0 <= peaks[0][1] / peaks[1][1] <= 5.0


def test_i6_sign_forced_by_conductivity_profile():
    # theta~ > 0 with the tanh profile makes kappa3_tilde > 0 pointwise, so
    # I6 = -int kappa3_tilde |grad theta|^2 must be negative
    rt = RealField(GRID, np.zeros(64))
    tt = RealField(GRID, 0.05 + 0.02 * np.cos(GRID.x))
    from thermogas.model import TildeState

    initial = change_variables(TildeState(rt, tt), "a_form", PARAMS)
    traj = simulate(initial, PARAMS, T=0.05, dt=0.01)
    ident = l2_energy_identity(traj, PARAMS)
    assert np.all(ident["I"][5] < 0.0)


def test_energy_report_rows():
    traj = _small_run(T=0.1, dt=0.01)
    report = energy_report(traj, PARAMS)
    rows = list(report.rows())
    assert len(rows) == len(traj.times)
    assert len(rows[0]) == len(report.HEADER)


def test_entropy_production_nonnegative_along_run():
    from thermogas.model import darcy_and_production

    traj = _small_run(T=0.2, dt=0.01, stride=4)
    for i in range(len(traj)):
        prim = traj.state_as(i, "primitive")
        delta = darcy_and_production(prim, PARAMS)["Delta_prod"].values
        assert delta.min() >= -1e-14


def test_scaling_constant_data_exact():
    state = zero_state(GRID)
    result = scaling_test(state, PARAMS, lam=2, T=0.05, dt=1e-3)
    assert result["discrepancy"] == 0.0


def test_scaling_single_mode_small_data():
    state = single_mode_state(GRID, [1], 1e-3, component="both")
    result = scaling_test(state, PARAMS, lam=2, T=0.05, dt=1e-3)
    assert result["discrepancy"] <= 1e-6


def test_scaling_besov_ratio_critical_dimension():
    # the 3/2 index is critical for d = 3: the two-grid ratio sits at 1
    grid = make_grid(3, 16, 2 * np.pi)
    state = single_mode_state(grid, [1, 0, 0], 1e-3, component="both")
    result = scaling_test(state, ModelParams(1.0, 1.0, 1.0), lam=2, T=0.01, dt=1e-3)
    assert 0.85 <= result["besov_ratio"] <= 1.15


def test_scaling_rejects_bad_lambda_and_unresolved_data():
    state = single_mode_state(GRID, [1], 1e-3)
    with pytest.raises(ValueError, match="integer"):
        scaling_test(state, PARAMS, lam=1, T=0.05, dt=1e-3)
    coarse = single_mode_state(GRID, [15], 1e-3)
    with pytest.raises(ValueError, match="unresolved"):
        scaling_test(coarse, PARAMS, lam=2, T=0.05, dt=1e-3)
