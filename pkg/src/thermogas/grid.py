"""Periodic-grid scalar fields, Fourier transforms, spectral calculus, norms.

Everything downstream runs on a uniform periodic box [0, L)^d sampled at n
points per axis (n a power of two).  Spectral coefficients use the
forward-normalized convention

    c(k) = (1/n^d) * sum_x f(x) exp(-i k.x),      k = (2*pi/L) * m,

with integer modes m_j in {-n/2, ..., n/2 - 1}, so a constant field has
coefficient 1 at k = 0 and real fields satisfy conj(c(k)) = c(-k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "make_grid",
    "forward",
    "inverse",
    "spectral_derivative",
    "gradient",
    "laplacian",
    "dealias",
    "field_norm",
]


@dataclass(frozen=True)
class Grid:
    """Pre-computed lattice data for a periodic box [0, L)^d.

    Attributes filled in post-init:
        shape         (n,)*d
        x             per-axis physical coordinates, length n
        modes         per-axis integer modes in fft order
        k_axes        broadcastable wavenumber array per axis, 2*pi*m/L
        k_sq          |k|^2 on the full lattice
        k_abs         |k| on the full lattice
        dealias_mask  True where every |m_j| <= n/3 (two-thirds rule)
        cell_volume   (L/n)^d quadrature weight
    """

    d: int
    n: int
    L: float
    x: np.ndarray = field(init=False, repr=False, compare=False)
    modes: np.ndarray = field(init=False, repr=False, compare=False)
    k_axes: tuple = field(init=False, repr=False, compare=False)
    k_sq: np.ndarray = field(init=False, repr=False, compare=False)
    k_abs: np.ndarray = field(init=False, repr=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension d must be 1, 2 or 3, got {self.d}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"points per axis n must be a power of two >= 8, got {self.n}")
        if not (self.L > 0):
            raise ValueError(f"box length L must be positive, got {self.L}")
        object.__setattr__(self, "x", np.arange(self.n) * (self.L / self.n))
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)  # 0..n/2-1, -n/2..-1
        object.__setattr__(self, "modes", m)
        axes = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            axes.append((2.0 * np.pi / self.L) * m.reshape(shape))
        object.__setattr__(self, "k_axes", tuple(axes))
        k_sq = sum(ax ** 2 for ax in axes)
        object.__setattr__(self, "k_sq", k_sq)
        object.__setattr__(self, "k_abs", np.sqrt(k_sq))
        cut = self.n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            mask &= np.abs(m.reshape(shape)) <= cut
        object.__setattr__(self, "dealias_mask", mask)

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n ** self.d

    @property
    def cell_volume(self):
        return (self.L / self.n) ** self.d

    @property
    def volume(self):
        return self.L ** self.d

    # Array-level transform helpers; hot paths use these directly and wrap
    # results in fields only at snapshot boundaries.
    def fft(self, values):
        return np.fft.fftn(np.asarray(values), norm="forward")

    def ifft(self, coefficients):
        return np.fft.ifftn(np.asarray(coefficients), norm="forward").real

    def integrate(self, values):
        """Box integral by the rectangle rule (exact for resolved modes)."""
        return float(np.sum(values) * self.cell_volume)


def make_grid(d: int, n: int, L: float) -> Grid:
    """Build the periodic-box descriptor; rejects invalid (d, n, L)."""
    return Grid(d=int(d), n=int(n), L=float(L))


def _check_grid_array(grid: Grid, values, dtype_ok) -> np.ndarray:
    arr = np.asarray(values)
    if arr.shape != grid.shape:
        raise ValueError(f"field shape {arr.shape} does not match grid shape {grid.shape}")
    if not dtype_ok(arr):
        raise ValueError(f"unexpected dtype {arr.dtype}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    return arr


@dataclass(frozen=True)
class RealField:
    """Scalar field sampled on the grid; values per point, all finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = _check_grid_array(self.grid, self.values, lambda a: np.isrealobj(a))
        object.__setattr__(self, "values", arr.astype(np.float64, copy=False))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients on the mode lattice (Hermitian for real fields)."""

    grid: Grid
    coefficients: np.ndarray

    def __post_init__(self):
        arr = _check_grid_array(self.grid, self.coefficients, lambda a: True)
        object.__setattr__(self, "coefficients", arr.astype(np.complex128, copy=False))

    def hermitian_defect(self) -> float:
        """Max |c(k) - conj(c(-k))| relative to max |c|; 0 for real fields."""
        c = self.coefficients
        flipped = c
        for ax in range(self.grid.d):
            flipped = np.flip(np.roll(flipped, -1, axis=ax), axis=ax)
        scale = np.abs(c).max()
        if scale == 0.0:
            return 0.0
        return float(np.abs(c - np.conj(flipped)).max() / scale)


def forward(f: RealField) -> SpectralField:
    return SpectralField(f.grid, f.grid.fft(f.values))


def inverse(g: SpectralField) -> RealField:
    """Inverse transform; refuses coefficients that are not real-field data."""
    full = np.fft.ifftn(g.coefficients, norm="forward")
    scale = np.abs(full.real).max()
    imag = np.abs(full.imag).max()
    if imag > 1e-10 * max(scale, 1e-300):
        raise ValueError(
            f"coefficients violate Hermitian symmetry (imaginary residue {imag:.3e})"
        )
    return RealField(g.grid, full.real)


def gradient(g: SpectralField) -> tuple:
    """Per-axis derivative fields: mode k multiplied by i*k_j."""
    return tuple(
        SpectralField(g.grid, 1j * kj * g.coefficients) for kj in g.grid.k_axes
    )


def laplacian(g: SpectralField) -> SpectralField:
    return SpectralField(g.grid, -g.grid.k_sq * g.coefficients)


def spectral_derivative(g: SpectralField, order: str):
    """Dispatch on order: 'gradient' -> tuple of fields, 'laplacian' -> field."""
    if order == "gradient":
        return gradient(g)
    if order == "laplacian":
        return laplacian(g)
    raise ValueError(f"unknown derivative order {order!r}")


def dealias(g: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with any |m_j| > n/3. Idempotent."""
    return SpectralField(g.grid, g.coefficients * g.grid.dealias_mask)


def _as_values(f) -> tuple:
    """Return (grid, physical values or None, coefficients or None)."""
    if isinstance(f, RealField):
        return f.grid, f.values, None
    if isinstance(f, SpectralField):
        return f.grid, None, f.coefficients
    raise TypeError(f"expected RealField or SpectralField, got {type(f).__name__}")


def field_norm(f, kind: str, p: float = 2.0, s: float = 0.0) -> float:
    """Grid norms. kind is one of:

    'lp'     rectangle-rule L^p norm, cell weight (L/n)^d; p = inf is max|f|
    'hs_dot' homogeneous Sobolev seminorm, k = 0 excluded:
             (L^d * sum_{k!=0} |k|^{2s} |c(k)|^2)^{1/2}
    'hs'     (||f||_{L2}^2 + ||f||_{hs_dot}^2)^{1/2}

    The spectral normalization makes ||cos(x1)||_{hs_dot, s=0} equal its L^2
    norm on an L = 2*pi box.
    """
    grid, values, coef = _as_values(f)
    if kind == "lp":
        if not (p >= 1.0):
            raise ValueError(f"Lp norm requires p >= 1, got {p}")
        if values is None:
            values = grid.ifft(coef)
        if np.isinf(p):
            return float(np.abs(values).max())
        return float((np.sum(np.abs(values) ** p) * grid.cell_volume) ** (1.0 / p))
    if kind in ("hs_dot", "hs"):
        if coef is None:
            coef = grid.fft(values)
        power = np.abs(coef) ** 2
        with np.errstate(divide="ignore"):
            weight = np.where(grid.k_sq > 0, grid.k_sq ** s, 0.0)
        dot_sq = grid.volume * float(np.sum(weight * power))
        if kind == "hs_dot":
            return float(np.sqrt(dot_sq))
        l2_sq = grid.volume * float(np.sum(power))
        return float(np.sqrt(l2_sq + dot_sq))
    raise ValueError(f"unknown norm kind {kind!r}")
