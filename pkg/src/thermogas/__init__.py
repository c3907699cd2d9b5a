"""Pseudo-spectral simulation and verification toolkit for a coupled
density-temperature diffusion system on periodic boxes."""

from .grid import (
    Grid,
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
from .lp import (
    BesovSpec,
    DyadicFamily,
    bernstein_check,
    besov_norm,
    block_lp_norms,
    build_dyadic_family,
    dyadic_block,
    dyadic_family,
    product_law_check,
)
from .model import (
    AState,
    ConductivityError,
    DenominatorError,
    ModelParams,
    PositivityError,
    PrimitiveState,
    TildeState,
    change_variables,
    darcy_and_production,
    difference_FG,
    nonlinear_FG,
    rhs_aform,
    rhs_primitive,
    rhs_tilde,
    state_functions,
)
from .integrators import (
    LinearPropagator,
    Trajectory,
    default_dt,
    linear_matrix,
    make_propagator,
    pde_residual,
    simulate,
    step,
)
from .fixedpoint import (
    FixedPointReport,
    check_smallness,
    phi_map,
    picard_iterate,
    solve_linearized,
    trajectory_diff_e_norm,
    trajectory_e_norm,
)
from .diagnostics import (
    EnergyReport,
    energy_functional_X,
    energy_report,
    l2_energy_identity,
    positivity_minima,
    scaling_test,
    total_mass,
)
from .initial import (
    random_band_field,
    random_band_state,
    rng_for,
    single_mode_field,
    single_mode_state,
    zero_state,
)
from .snapshots import load_snapshot, save_snapshot

__version__ = "0.1.0"
