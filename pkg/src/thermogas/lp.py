"""Dyadic frequency decomposition and homogeneous Besov norms on the torus.

The blocks are spectral multipliers phi(2^{-j} |k|) built from a smooth
radial cutoff phi0 with

    phi0(xi) = 1 for |xi| <= 1,   phi0(xi) = 0 for |xi| >= 7/6,

and, on the transition interval 1 < |xi| < 7/6, the exponential smoothstep

    phi0(xi) = 1 - g(t) / (g(t) + g(1 - t)),    t = 6 (|xi| - 1),
    g(t) = exp(-1/t) for t > 0 else 0.

phi(xi) := phi0(xi) - phi0(2 xi) is supported in 1/2 <= |xi| <= 7/6, and the
telescoping sum over j of phi(2^{-j} |k|) equals 1 exactly for every nonzero
lattice wavenumber once j covers the lattice range (padded by one octave on
each side).  The k = 0 mode is excluded throughout: homogeneous norms ignore
the mean, which the blocks annihilate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, RealField, SpectralField, field_norm

__all__ = [
    "phi0_profile",
    "phi_profile",
    "BesovSpec",
    "DyadicFamily",
    "build_dyadic_family",
    "dyadic_family",
    "dyadic_block",
    "block_lp_norms",
    "besov_norm",
    "bernstein_check",
    "product_law_check",
]


def phi0_profile(xi):
    """Smooth radial cutoff: 1 on [0, 1], 0 on [7/6, inf), smoothstep between."""
    xi = np.asarray(xi, dtype=float)
    t = 6.0 * (xi - 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        g_t = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        g_1mt = np.where(1.0 - t > 0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    mid = 1.0 - g_t / (g_t + g_1mt + (g_t + g_1mt == 0.0))
    out = np.where(xi <= 1.0, 1.0, np.where(xi >= 7.0 / 6.0, 0.0, mid))
    return out if out.ndim else float(out)


def phi_profile(xi):
    """Annulus bump phi(xi) = phi0(xi) - phi0(2 xi), supported in [1/2, 7/6]."""
    return phi0_profile(xi) - phi0_profile(2.0 * np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class BesovSpec:
    """Homogeneous Besov space indices (regularity s, integrability p, sum r)."""

    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError(f"Besov p must be >= 1, got {self.p}")
        if not (self.r >= 1.0):
            raise ValueError(f"Besov r must be >= 1, got {self.r}")


@dataclass(frozen=True)
class DyadicFamily:
    """Sampled dyadic multipliers for one grid.

    js runs over [j_min, j_max], one octave beyond the lattice extremes on
    each side so the partition of unity closes on every nonzero mode.
    multipliers[i] holds phi(2^{-js[i]} |k|) on the full lattice.
    """

    grid: Grid
    j_min: int
    j_max: int
    multipliers: np.ndarray = field(repr=False, compare=False)

    @property
    def js(self):
        return np.arange(self.j_min, self.j_max + 1)

    def multiplier(self, j: int):
        """phi(2^{-j} |k|); zero array for j outside the stored range."""
        if self.j_min <= j <= self.j_max:
            return self.multipliers[j - self.j_min]
        return np.zeros(self.grid.shape)

    def low_pass(self, j: int):
        """phi0(2^{-j} |k|), the smoothed cut below 2^j."""
        return phi0_profile(self.grid.k_abs / 2.0 ** j)

    def partition_residual(self) -> float:
        """max over nonzero lattice modes of |sum_j phi_j - 1|."""
        total = self.multipliers.sum(axis=0)
        nonzero = self.grid.k_sq > 0
        return float(np.abs(total[nonzero] - 1.0).max())


def build_dyadic_family(grid: Grid) -> DyadicFamily:
    k_min = 2.0 * np.pi / grid.L
    k_max = np.sqrt(grid.d) * np.pi * grid.n / grid.L
    j_min = int(np.floor(np.log2(k_min))) - 1
    j_max = int(np.ceil(np.log2(k_max))) + 1
    mults = np.stack(
        [phi_profile(grid.k_abs / 2.0 ** j) for j in range(j_min, j_max + 1)]
    )
    return DyadicFamily(grid=grid, j_min=j_min, j_max=j_max, multipliers=mults)


_FAMILIES: dict = {}


def dyadic_family(grid: Grid) -> DyadicFamily:
    """Memoized family for the given box signature."""
    key = (grid.d, grid.n, grid.L)
    fam = _FAMILIES.get(key)
    if fam is None:
        fam = _FAMILIES[key] = build_dyadic_family(grid)
    return fam


def _coefficients(u):
    if isinstance(u, RealField):
        return u.grid, u.grid.fft(u.values)
    if isinstance(u, SpectralField):
        return u.grid, u.coefficients
    raise TypeError(f"expected a field, got {type(u).__name__}")


def dyadic_block(u, j: int, kind: str = "Delta"):
    """Apply Delta_j (annulus) or S_j (low-pass) to a field.

    Returns the same representation as the input.
    """
    grid, coef = _coefficients(u)
    fam = dyadic_family(grid)
    if kind == "Delta":
        mult = fam.multiplier(j)
    elif kind == "S":
        mult = fam.low_pass(j)
    else:
        raise ValueError(f"kind must be 'Delta' or 'S', got {kind!r}")
    out = coef * mult
    if isinstance(u, RealField):
        return RealField(grid, grid.ifft(out))
    return SpectralField(grid, out)


def block_lp_norms(u, p: float = 2.0) -> np.ndarray:
    """||Delta_j u||_{L^p} for every j in the family range.

    p = 2 is evaluated on the Fourier side (Parseval); other p transform
    each block back to the grid.
    """
    grid, coef = _coefficients(u)
    fam = dyadic_family(grid)
    if p == 2.0:
        power = np.abs(coef) ** 2
        block_sq = grid.volume * np.tensordot(
            fam.multipliers ** 2, power, axes=(tuple(range(1, grid.d + 1)), tuple(range(grid.d)))
        )
        return np.sqrt(np.maximum(block_sq, 0.0))
    out = np.empty(len(fam.js))
    for i, mult in enumerate(fam.multipliers):
        block = RealField(grid, grid.ifft(coef * mult))
        out[i] = field_norm(block, "lp", p=p)
    return out


def besov_norm(u, spec: BesovSpec) -> float:
    """Homogeneous Besov norm (sum_j 2^{jsr} ||Delta_j u||_{L^p}^r)^{1/r}."""
    grid, _ = _coefficients(u)
    fam = dyadic_family(grid)
    norms = block_lp_norms(u, p=spec.p)
    weighted = 2.0 ** (fam.js * spec.s) * norms
    if np.isinf(spec.r):
        return float(weighted.max()) if weighted.size else 0.0
    return float(np.sum(weighted ** spec.r) ** (1.0 / spec.r))


def bernstein_check(u, j: int, p: float = 2.0) -> float:
    """||grad Delta_j u||_{L^p} / (2^j ||Delta_j u||_{L^p}).

    The gradient magnitude is pointwise Euclidean across axes.  Raises on a
    zero block, where the ratio is undefined.
    """
    grid, coef = _coefficients(u)
    fam = dyadic_family(grid)
    block = coef * fam.multiplier(j)
    block_f = RealField(grid, grid.ifft(block))
    denom = field_norm(block_f, "lp", p=p)
    if denom == 0.0:
        raise ValueError(f"Delta_{j} u is zero; Bernstein ratio undefined")
    grad_sq = np.zeros(grid.shape)
    for kj in grid.k_axes:
        grad_sq += grid.ifft(1j * kj * block) ** 2
    mag = RealField(grid, np.sqrt(grad_sq))
    return field_norm(mag, "lp", p=p) / (2.0 ** j * denom)


_LAWS = ("algebra", "linfty", "high_low", "sum_minus", "mixed")


def product_law_check(
    u,
    v,
    law: str = "algebra",
    s: float = 1.5,
    s2: float = 2.0,
    r: float = 1.0,
) -> float:
    """Measured constant ||uv|| / rhs for one Besov product law (p = 2 only).

    law selects the bound being probed:
      algebra    ||uv||_{B(3/2,2,1)} <= C ||u||_{B(3/2,2,1)} ||v||_{B(3/2,2,1)}
      linfty     ||uv||_{B(s,2,r)}   <= C (||u||_inf ||v||_B + ||v||_inf ||u||_B), s > 0
      high_low   ||uv||_{B(s,2,r)}   <= C ||u||_{B(s,2,r)} ||v||_{B(s2,2,r)},
                 s <= 3/2 < s2
      sum_minus  ||uv||_{B(s+s2-3/2)} <= C ||u||_{B(s,2,r)} ||v||_{B(s2,2,r)},
                 s, s2 < 3/2 (<= when r = 1) and s + s2 > 0
      mixed      ||uv||_{B(s,2,r)}   <= C ||u||_{B(s,2,r)} max(||v||_{B(3/2,2,1)},
                 ||v||_inf), |s| < 3/2

    Zero right-hand sides are degenerate and rejected.
    """
    if law not in _LAWS:
        raise ValueError(f"unknown product law {law!r}; choose from {_LAWS}")
    grid, cu = _coefficients(u)
    _, cv = _coefficients(v)
    pu = RealField(grid, grid.ifft(cu))
    pv = RealField(grid, grid.ifft(cv))
    prod = RealField(grid, pu.values * pv.values)

    if law == "algebra":
        spec = BesovSpec(1.5, 2.0, 1.0)
        denom = besov_norm(pu, spec) * besov_norm(pv, spec)
        num = besov_norm(prod, spec)
    elif law == "linfty":
        if not (s > 0):
            raise ValueError(f"linfty law requires s > 0, got s={s}")
        spec = BesovSpec(s, 2.0, r)
        denom = field_norm(pu, "lp", p=np.inf) * besov_norm(pv, spec) + field_norm(
            pv, "lp", p=np.inf
        ) * besov_norm(pu, spec)
        num = besov_norm(prod, spec)
    elif law == "high_low":
        if not (s <= 1.5 < s2):
            raise ValueError(f"high_low law requires s <= 3/2 < s2, got s={s}, s2={s2}")
        denom = besov_norm(pu, BesovSpec(s, 2.0, r)) * besov_norm(pv, BesovSpec(s2, 2.0, r))
        num = besov_norm(prod, BesovSpec(s, 2.0, r))
    elif law == "sum_minus":
        strict = s < 1.5 and s2 < 1.5
        if not ((strict or (r == 1.0 and s <= 1.5 and s2 <= 1.5)) and s + s2 > 0):
            raise ValueError(
                f"sum_minus law requires s, s2 < 3/2 (<= when r = 1) and s + s2 > 0, "
                f"got s={s}, s2={s2}, r={r}"
            )
        denom = besov_norm(pu, BesovSpec(s, 2.0, r)) * besov_norm(pv, BesovSpec(s2, 2.0, r))
        num = besov_norm(prod, BesovSpec(s + s2 - 1.5, 2.0, r))
    else:  # mixed
        if not (abs(s) < 1.5):
            raise ValueError(f"mixed law requires |s| < 3/2, got s={s}")
        denom = besov_norm(pu, BesovSpec(s, 2.0, r)) * max(
            besov_norm(pv, BesovSpec(1.5, 2.0, 1.0)), field_norm(pv, "lp", p=np.inf)
        )
        num = besov_norm(prod, BesovSpec(s, 2.0, r))

    if denom == 0.0:
        raise ValueError("degenerate input: right-hand side of the product law is zero")
    return num / denom
