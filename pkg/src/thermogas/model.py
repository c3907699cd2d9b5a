"""Model physics for the coupled density-temperature diffusion system.

The governing system evolves a mass density rho > 0 and an absolute
temperature theta > 0 on a periodic box:

    d_t rho = kappa1 * Lap(rho * theta)
    kappa2 * d_t(rho theta) - kappa1 (kappa1 + kappa2) div(theta grad(rho theta))
        = div(kappa3(theta) grad theta)

with conductivity kappa3(theta) = kappa3_bar + kappa3_tilde(theta - theta_eq),
kappa3_tilde(0) = 0.  Three equivalent unknowns are supported:

    primitive  (rho, theta)
    tilde      (rho - rho_eq, theta - theta_eq)
    a-form     (a, theta_tilde) with a = 1/rho - 1

plus the thermodynamic state functions (free energy, entropy, internal
energy, pressure), the Darcy velocity / entropy-production diagnostics, the
a-form nonlinearities (F, G), and their exact difference expansions
(deltaF, deltaG with the eight J blocks) used by the contraction solver.

Nonlinear terms are evaluated pseudo-spectrally: derivatives in Fourier
space, products pointwise, every product dealiased by the two-thirds rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, RealField

__all__ = [
    "ModelParams",
    "PrimitiveState",
    "TildeState",
    "AState",
    "PositivityError",
    "DenominatorError",
    "ConductivityError",
    "state_functions",
    "darcy_and_production",
    "rhs_primitive",
    "rhs_tilde",
    "rhs_aform",
    "change_variables",
    "nonlinear_FG",
    "difference_FG",
]


class PositivityError(ValueError):
    """A pointwise positivity invariant failed (reported, never silent)."""


class DenominatorError(ValueError):
    """1 + a (equivalently 1 + b) fell below the configured floor."""


class ConductivityError(ValueError):
    """kappa3(theta) went negative somewhere on the grid."""


@dataclass(frozen=True)
class ModelParams:
    """Model constants and the variable-conductivity profile.

    kappa3_profile 'zero' keeps the conductivity constant at kappa3_bar;
    'tanh' adds kappa3_alpha * tanh(theta_tilde), which vanishes at
    equilibrium and has first/second derivatives bounded by kappa3_alpha
    and ~0.7699 * kappa3_alpha.
    """

    kappa1: float
    kappa2: float
    kappa3_bar: float
    kappa3_profile: str = "zero"
    kappa3_alpha: float = 0.0
    equilibrium: tuple = (1.0, 1.0)
    eps_a: float = 0.1

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappa3_bar"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if self.kappa3_profile not in ("zero", "tanh"):
            raise ValueError(f"kappa3_profile must be 'zero' or 'tanh', got {self.kappa3_profile!r}")
        if self.kappa3_alpha < 0:
            raise ValueError(f"kappa3_alpha must be non-negative, got {self.kappa3_alpha}")
        rho_eq, theta_eq = self.equilibrium
        if not (rho_eq > 0 and theta_eq > 0):
            raise ValueError(f"equilibrium state must be positive, got {self.equilibrium}")
        if not (0 < self.eps_a < 1):
            raise ValueError(f"eps_a must lie in (0, 1), got {self.eps_a}")

    def kappa3_tilde(self, theta_tilde):
        if self.kappa3_profile == "zero" or self.kappa3_alpha == 0.0:
            return np.zeros_like(np.asarray(theta_tilde, dtype=float))
        return self.kappa3_alpha * np.tanh(theta_tilde)

    def kappa3_tilde_prime(self, theta_tilde):
        if self.kappa3_profile == "zero" or self.kappa3_alpha == 0.0:
            return np.zeros_like(np.asarray(theta_tilde, dtype=float))
        return self.kappa3_alpha / np.cosh(theta_tilde) ** 2

    def kappa3(self, theta):
        return self.kappa3_bar + self.kappa3_tilde(theta - self.equilibrium[1])

    def require_unit_equilibrium(self, what: str):
        if self.equilibrium != (1.0, 1.0):
            raise ValueError(
                f"{what} is formulated around the unit equilibrium (1, 1); "
                f"got equilibrium {self.equilibrium}"
            )


# ---------------------------------------------------------------------------
# States


def _pair_grid(f1: RealField, f2: RealField) -> Grid:
    if f1.grid is not f2.grid and (f1.grid.d, f1.grid.n, f1.grid.L) != (
        f2.grid.d,
        f2.grid.n,
        f2.grid.L,
    ):
        raise ValueError("state components live on different grids")
    return f1.grid


@dataclass(frozen=True)
class PrimitiveState:
    rho: RealField
    theta: RealField

    @property
    def grid(self):
        return _pair_grid(self.rho, self.theta)


@dataclass(frozen=True)
class TildeState:
    rho_tilde: RealField
    theta_tilde: RealField

    @property
    def grid(self):
        return _pair_grid(self.rho_tilde, self.theta_tilde)


@dataclass(frozen=True)
class AState:
    a: RealField
    theta_tilde: RealField

    @property
    def grid(self):
        return _pair_grid(self.a, self.theta_tilde)


def _argmin_point(grid: Grid, values) -> tuple:
    idx = np.unravel_index(int(np.argmin(values)), grid.shape)
    return tuple(int(i) for i in idx)


def check_positive(state: PrimitiveState):
    """Raise PositivityError naming the offending minimum and grid point."""
    for name, f in (("rho", state.rho), ("theta", state.theta)):
        mn = float(f.values.min())
        if mn <= 0.0:
            raise PositivityError(
                f"{name} must be positive; min {mn:.6e} at point {_argmin_point(state.grid, f.values)}"
            )


def check_floor(grid: Grid, one_plus, params: ModelParams, label: str):
    mn = float(np.min(one_plus))
    if mn < params.eps_a:
        raise DenominatorError(
            f"{label} = {mn:.6e} below floor eps_a = {params.eps_a} "
            f"at point {_argmin_point(grid, one_plus)}"
        )


def change_variables(state, target: str, params: ModelParams):
    """Exact pointwise conversion between the three formulations."""
    rho_eq, theta_eq = params.equilibrium
    if target not in ("primitive", "tilde", "a_form"):
        raise ValueError(f"unknown target formulation {target!r}")

    if isinstance(state, PrimitiveState):
        rho, theta = state.rho, state.theta
    elif isinstance(state, TildeState):
        rho = RealField(state.grid, state.rho_tilde.values + rho_eq)
        theta = RealField(state.grid, state.theta_tilde.values + theta_eq)
    elif isinstance(state, AState):
        check_floor(state.grid, 1.0 + state.a.values, params, "1 + a")
        rho = RealField(state.grid, 1.0 / (1.0 + state.a.values))
        theta = RealField(state.grid, state.theta_tilde.values + theta_eq)
    else:
        raise TypeError(f"unknown state type {type(state).__name__}")

    if target == "primitive":
        return PrimitiveState(rho, theta)
    if target == "tilde":
        return TildeState(
            RealField(rho.grid, rho.values - rho_eq),
            RealField(theta.grid, theta.values - theta_eq),
        )
    if float(rho.values.min()) < params.eps_a:
        raise DenominatorError(
            f"rho min {float(rho.values.min()):.6e} below floor eps_a = {params.eps_a}"
        )
    return AState(
        RealField(rho.grid, 1.0 / rho.values - 1.0),
        RealField(theta.grid, theta.values - theta_eq),
    )


# ---------------------------------------------------------------------------
# Thermodynamic state functions


def state_functions(rho, theta, params: ModelParams) -> dict:
    """Free energy psi, entropy eta, internal energy e, pressure p, eta_theta.

        psi = kappa1 theta rho ln(rho) - kappa2 rho theta ln(theta)
        eta = -d(psi)/d(theta) = -kappa1 rho ln(rho) + kappa2 rho (ln(theta) + 1)
        e   = psi + eta theta          (equals kappa2 rho theta identically)
        p   = kappa1 rho theta
        eta_theta = kappa2 rho / theta

    Accepts scalars or arrays; rejects non-positive rho or theta.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0) or np.any(theta <= 0):
        raise PositivityError("state_functions requires rho > 0 and theta > 0")
    k1, k2 = params.kappa1, params.kappa2
    log_rho, log_theta = np.log(rho), np.log(theta)
    psi = k1 * theta * rho * log_rho - k2 * rho * theta * log_theta
    eta = -k1 * rho * log_rho + k2 * rho * (log_theta + 1.0)
    e = psi + eta * theta
    p = k1 * rho * theta
    eta_theta = k2 * rho / theta
    return {"psi": psi, "eta": eta, "e": e, "p": p, "eta_theta": eta_theta}


# ---------------------------------------------------------------------------
# Pseudo-spectral helpers (array level)


def _grad(grid: Grid, values):
    c = grid.fft(values)
    return [grid.ifft(1j * kj * c) for kj in grid.k_axes]


def _lap(grid: Grid, values):
    return grid.ifft(-grid.k_sq * grid.fft(values))


def _div(grid: Grid, components):
    out = np.zeros(grid.shape)
    for comp, kj in zip(components, grid.k_axes):
        out += grid.ifft(1j * kj * grid.fft(comp))
    return out


def _dealias_values(grid: Grid, values):
    return grid.ifft(grid.dealias_mask * grid.fft(values))


def _dmul(grid: Grid, a, b):
    """Pointwise product followed by two-thirds dealiasing."""
    return _dealias_values(grid, a * b)


def _ddot(grid: Grid, va, vb):
    """Dealiased dot product of two gradient-like tuples."""
    s = np.zeros(grid.shape)
    for ca, cb in zip(va, vb):
        s += ca * cb
    return _dealias_values(grid, s)


# ---------------------------------------------------------------------------
# Right-hand sides in the three formulations


def rhs_primitive(state: PrimitiveState, params: ModelParams):
    """Tendencies (d_t rho, d_t theta) of the governing system.

    d_t theta is extracted from the second equation via
    d_t theta = [kappa1(kappa1+kappa2) div(theta grad(rho theta))
                 + div(kappa3 grad theta) - kappa2 theta d_t rho] / (kappa2 rho).
    """
    check_positive(state)
    grid = state.grid
    k1, k2 = params.kappa1, params.kappa2
    rho, theta = state.rho.values, state.theta.values

    kap3 = params.kappa3(theta)
    mn = float(kap3.min()) if isinstance(kap3, np.ndarray) else float(kap3)
    if mn < 0:
        raise ConductivityError(f"kappa3(theta) must stay non-negative; min {mn:.6e}")

    P = _dmul(grid, rho, theta)
    dtrho = _lap(grid, k1 * P)

    grad_P = _grad(grid, P)
    flux = [_dmul(grid, theta, g) for g in grad_P]
    div_flux = _div(grid, flux)

    grad_theta = _grad(grid, theta)
    heat = _div(grid, [_dmul(grid, kap3, g) for g in grad_theta])

    dttheta = (
        k1 * (k1 + k2) * div_flux + heat - k2 * _dmul(grid, theta, dtrho)
    ) / (k2 * rho)
    dttheta = _dealias_values(grid, dttheta)
    return RealField(grid, dtrho), RealField(grid, dttheta)


def rhs_tilde(state: TildeState, params: ModelParams):
    """Tendencies of the zero-mean formulation around the unit equilibrium.

    With S := rho_tilde + theta_tilde + rho_tilde * theta_tilde (so that
    rho * theta = 1 + S), the exact expansion reads

        d_t rho_tilde = kappa1 Lap(S)
        kappa2 (1 + rho_tilde) d_t theta_tilde =
              kappa1 (kappa1 + kappa2) grad(theta_tilde) . grad(S)
            + kappa1^2 (1 + theta_tilde) Lap(S)
            + kappa3_bar Lap(theta_tilde) + div(kappa3_tilde grad theta_tilde).
    """
    params.require_unit_equilibrium("the tilde-form right-hand side")
    grid = state.grid
    k1, k2, k3b = params.kappa1, params.kappa2, params.kappa3_bar
    rt, tt = state.rho_tilde.values, state.theta_tilde.values
    check_positive(change_variables(state, "primitive", params))

    S = rt + tt + _dmul(grid, rt, tt)
    lap_S = _lap(grid, S)
    dtrho = k1 * lap_S

    grad_S = _grad(grid, S)
    grad_tt = _grad(grid, tt)
    lap_tt = _lap(grid, tt)

    rhs2 = (
        k1 * (k1 + k2) * _ddot(grid, grad_tt, grad_S)
        + k1 ** 2 * (lap_S + _dmul(grid, tt, lap_S))
        + k3b * lap_tt
        + _dmul(grid, params.kappa3_tilde_prime(tt), _ddot(grid, grad_tt, grad_tt))
        + _dmul(grid, params.kappa3_tilde(tt), lap_tt)
    )
    dttheta = _dealias_values(grid, rhs2 / (k2 * (1.0 + rt)))
    return RealField(grid, dtrho), RealField(grid, dttheta)


def rhs_aform(state: AState, params: ModelParams):
    """Tendencies of the (a, theta_tilde) formulation: linear part plus (F, G).

        d_t a           = kappa1 Lap(a) - kappa1 Lap(theta_tilde) + F
        kappa2 d_t th~  = (kappa1^2 + kappa3_bar) Lap(th~) - kappa1^2 Lap(a) + G
    """
    params.require_unit_equilibrium("the a-form right-hand side")
    grid = state.grid
    k1, k2, k3b = params.kappa1, params.kappa2, params.kappa3_bar
    a, tt = state.a.values, state.theta_tilde.values
    F, G = _fg_arrays(grid, a, tt, params)
    dta = k1 * _lap(grid, a) - k1 * _lap(grid, tt) + F
    dttheta = ((k1 ** 2 + k3b) * _lap(grid, tt) - k1 ** 2 * _lap(grid, a) + G) / k2
    return RealField(grid, dta), RealField(grid, dttheta)


# ---------------------------------------------------------------------------
# Darcy velocity, entropy production, work flux


def darcy_and_production(state: PrimitiveState, params: ModelParams) -> dict:
    """Velocity u = -grad(p)/rho, entropy production, and work flux.

        Delta = (1/theta) * (rho |u|^2 + kappa3(theta) |grad theta|^2 / theta)
        W     = -(psi_rho * rho + theta * eta) * u

    Delta is pointwise non-negative whenever kappa3(theta) >= 0; a negative
    conductivity anywhere is rejected with the offending minimum.
    """
    check_positive(state)
    grid = state.grid
    k1, k2 = params.kappa1, params.kappa2
    rho, theta = state.rho.values, state.theta.values

    kap3 = np.asarray(params.kappa3(theta), dtype=float)
    mn = float(kap3.min())
    if mn < 0:
        raise ConductivityError(
            f"kappa3(theta) must stay non-negative; min {mn:.6e} "
            f"at point {_argmin_point(grid, kap3)}"
        )

    p = k1 * _dmul(grid, rho, theta)
    u = [-g / rho for g in _grad(grid, p)]
    grad_theta = _grad(grid, theta)

    u_sq = sum(c * c for c in u)
    gt_sq = sum(c * c for c in grad_theta)
    delta = (rho * u_sq + kap3 * gt_sq / theta) / theta

    funcs = state_functions(rho, theta, params)
    psi_rho = k1 * theta * (np.log(rho) + 1.0) - k2 * theta * np.log(theta)
    work_scalar = -(psi_rho * rho + theta * funcs["eta"])
    W = [RealField(grid, work_scalar * c) for c in u]

    return {
        "u": tuple(RealField(grid, c) for c in u),
        "Delta_prod": RealField(grid, delta),
        "W": tuple(W),
    }


# ---------------------------------------------------------------------------
# a-form nonlinearities F, G and their difference expansions


def _fg_arrays(grid: Grid, b, tau, params: ModelParams):
    """Array-level (F, G); callers guarantee shapes match the grid."""
    check_floor(grid, 1.0 + b, params, "1 + b")
    k1, k2, k3b = params.kappa1, params.kappa2, params.kappa3_bar
    ob = 1.0 + b
    gb = _grad(grid, b)
    gt = _grad(grid, tau)
    lap_b = _lap(grid, b)
    lap_t = _lap(grid, tau)
    gb2 = _ddot(grid, gb, gb)
    gt2 = _ddot(grid, gt, gt)
    gbgt = _ddot(grid, gb, gt)

    F = (
        -2.0 * k1 * _dmul(grid, (tau + 1.0) / ob, gb2)
        + 2.0 * k1 * gbgt
        - k1 * _dmul(grid, b, lap_t)
        + k1 * _dmul(grid, tau, lap_b)
    )

    kt = params.kappa3_tilde(tau)
    ktp = params.kappa3_tilde_prime(tau)
    conduct = _dmul(grid, ktp, gt2) + _dmul(grid, kt, lap_t)
    G = (
        2.0 * k1 ** 2 * _dmul(grid, ((tau + 1.0) / ob) ** 2, gb2)
        - (3.0 * k1 ** 2 + k1 * k2) * _dmul(grid, (tau + 1.0) / ob, gbgt)
        - k1 ** 2 * _dmul(grid, (tau ** 2 + 2.0 * tau) / ob, lap_b)
        + k1 ** 2 * _dmul(grid, b / ob, lap_b)
        + k3b * _dmul(grid, b, lap_t)
        + k1 ** 2 * _dmul(grid, tau, lap_t)
        + conduct
        + _dmul(grid, b, conduct)
        + k1 * (k1 + k2) * gt2
    )
    return F, G


def nonlinear_FG(b: RealField, tau: RealField, params: ModelParams):
    """The a-form nonlinearities (F, G); every product dealiased."""
    grid = _pair_grid(b, tau)
    F, G = _fg_arrays(grid, b.values, tau.values, params)
    return RealField(grid, F), RealField(grid, G)


def difference_FG(
    b1: RealField,
    tau1: RealField,
    b2: RealField,
    tau2: RealField,
    params: ModelParams,
) -> dict:
    """Difference expansions of (F, G) between two states.

    Returns the expanded deltaF, the expanded deltaG assembled from the
    eight blocks J1..J8 as

        deltaG = 2 k1^2 J1 - (3 k1^2 + k1 k2) J2 - k1^2 J3 + k1^2 J4
                 + kappa3_bar J5 + k1^2 J6 + J7 + k1 (k1 + k2) J8,

    the blocks themselves, and the direct differences F(1)-F(2), G(1)-G(2)
    for identity testing.  The full-difference quotient uses the exact
    identity 1/(1+b1) - 1/(1+b2) = -(b1-b2)/((1+b1)(1+b2)).
    """
    grid = _pair_grid(b1, tau1)
    _pair_grid(b2, tau2)
    k1, k2, k3b = params.kappa1, params.kappa2, params.kappa3_bar
    v1, t1 = b1.values, tau1.values
    v2, t2 = b2.values, tau2.values
    check_floor(grid, 1.0 + v1, params, "1 + b1")
    check_floor(grid, 1.0 + v2, params, "1 + b2")

    o1, o2 = 1.0 + v1, 1.0 + v2
    db = v1 - v2
    dtau = t1 - t2
    inv_diff = -db / (o1 * o2)  # 1/(1+b1) - 1/(1+b2)

    g_b1, g_b2 = _grad(grid, v1), _grad(grid, v2)
    g_t1, g_t2 = _grad(grid, t1), _grad(grid, t2)
    g_db, g_dt = _grad(grid, db), _grad(grid, dtau)
    lap_b2, lap_db = _lap(grid, v2), _lap(grid, db)
    lap_t2, lap_dt = _lap(grid, t2), _lap(grid, dtau)

    gb2_sq = _ddot(grid, g_b2, g_b2)
    gb1_sq = _ddot(grid, g_b1, g_b1)
    gt2_sq = _ddot(grid, g_t2, g_t2)

    dF = (
        -2.0 * k1 * _dmul(grid, inv_diff * (t2 + 1.0), gb2_sq)
        - 2.0 * k1 * _dmul(grid, (t2 + 1.0) / o1, _ddot(grid, g_db, g_b2))
        - 2.0 * k1 * _dmul(grid, (t2 + 1.0) / o1, _ddot(grid, g_b1, g_db))
        - 2.0 * k1 * _dmul(grid, dtau / o1, gb1_sq)
        + 2.0 * k1 * _ddot(grid, g_db, g_t2)
        + 2.0 * k1 * _ddot(grid, g_b1, g_dt)
        - k1 * _dmul(grid, db, lap_t2)
        - k1 * _dmul(grid, v1, lap_dt)
        + k1 * _dmul(grid, dtau, lap_b2)
        + k1 * _dmul(grid, t1, lap_db)
    )

    J1 = (
        _dmul(grid, inv_diff * (t2 + 1.0) ** 2 * (1.0 / o2 + 1.0 / o1), gb2_sq)
        + _dmul(grid, dtau * (t1 + t2 + 2.0) / o1 ** 2, gb2_sq)
        + _dmul(grid, (t1 + 1.0) ** 2 / o1 ** 2, _ddot(grid, g_db, _vsum(g_b1, g_b2)))
    )
    J2 = (
        _dmul(grid, inv_diff * (t2 + 1.0), _ddot(grid, g_b2, g_t2))
        + _dmul(grid, dtau / o1, _ddot(grid, g_b2, g_t2))
        + _dmul(grid, (t1 + 1.0) / o1, _ddot(grid, g_db, g_t2))
        + _dmul(grid, (t1 + 1.0) / o1, _ddot(grid, g_b1, g_dt))
    )
    J3 = (
        _dmul(grid, inv_diff * (t2 ** 2 + 2.0 * t2), lap_b2)
        + _dmul(grid, dtau * (t1 + t2 + 2.0) / o1, lap_b2)
        + _dmul(grid, (t1 ** 2 + 2.0 * t1) / o1, lap_db)
    )
    J4 = _dmul(grid, v1 / o1 - v2 / o2, lap_b2) + _dmul(grid, v1 / o1, lap_db)
    J5 = _dmul(grid, db, lap_t2) + _dmul(grid, v1, lap_dt)
    J6 = _dmul(grid, dtau, lap_t2) + _dmul(grid, t1, lap_dt)

    kt1, kt2 = params.kappa3_tilde(t1), params.kappa3_tilde(t2)
    ktp1, ktp2 = params.kappa3_tilde_prime(t1), params.kappa3_tilde_prime(t2)
    J7 = (
        _dmul(grid, db, _dmul(grid, kt2, lap_t2) + _dmul(grid, ktp2, gt2_sq))
        + _dmul(grid, o1 * (kt1 - kt2), lap_t2)
        + _dmul(grid, o1 * kt1, lap_dt)
        + _dmul(grid, o1 * (ktp1 - ktp2), gt2_sq)
        + _dmul(grid, o1 * ktp1, _ddot(grid, g_dt, _vsum(g_t1, g_t2)))
    )
    J8 = _ddot(grid, g_dt, _vsum(g_t1, g_t2))

    dG = (
        2.0 * k1 ** 2 * J1
        - (3.0 * k1 ** 2 + k1 * k2) * J2
        - k1 ** 2 * J3
        + k1 ** 2 * J4
        + k3b * J5
        + k1 ** 2 * J6
        + J7
        + k1 * (k1 + k2) * J8
    )

    F1, G1 = _fg_arrays(grid, v1, t1, params)
    F2, G2 = _fg_arrays(grid, v2, t2, params)

    wrap = lambda arr: RealField(grid, arr)
    return {
        "dF": wrap(dF),
        "dG": wrap(dG),
        "J": tuple(wrap(j) for j in (J1, J2, J3, J4, J5, J6, J7, J8)),
        "direct_dF": wrap(F1 - F2),
        "direct_dG": wrap(G1 - G2),
    }


def _vsum(va, vb):
    return [ca + cb for ca, cb in zip(va, vb)]
