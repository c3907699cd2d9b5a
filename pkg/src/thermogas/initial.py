"""Initial-condition presets and the reproducible random-field generator.

Random data uses numpy's counter-based Philox engine keyed by
SeedSequence((seed, stream)), so a (seed, stream) pair plus the documented
construction below pins every corpus bit-for-bit:

    draw n^d standard normals in C order, transform, keep modes with every
    |m_j| <= band (mean mode excluded), transform back, rescale the values
    to the requested peak amplitude max|f| = amplitude.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid, RealField
from .model import AState

__all__ = [
    "rng_for",
    "zero_state",
    "single_mode_field",
    "single_mode_state",
    "random_band_field",
    "random_band_state",
]


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for an independent named stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(stream)))))


def zero_state(grid: Grid) -> AState:
    z = np.zeros(grid.shape)
    return AState(RealField(grid, z), RealField(grid, z.copy()))


def single_mode_field(grid: Grid, k, amplitude: float) -> RealField:
    """amplitude * cos(k . x) for an integer mode vector k."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (grid.d,):
        raise ValueError(f"mode vector must have {grid.d} entries, got {k.shape}")
    phase = np.zeros(grid.shape)
    for j in range(grid.d):
        shape = [1] * grid.d
        shape[j] = grid.n
        phase = phase + (2.0 * np.pi / grid.L) * k[j] * grid.x.reshape(shape)
    return RealField(grid, amplitude * np.cos(phase))


def single_mode_state(grid: Grid, k, amplitude: float, component: str = "both") -> AState:
    zero = RealField(grid, np.zeros(grid.shape))
    mode = single_mode_field(grid, k, amplitude)
    if component == "a":
        return AState(mode, zero)
    if component == "theta":
        return AState(zero, mode)
    if component == "both":
        return AState(mode, single_mode_field(grid, k, amplitude))
    raise ValueError(f"component must be 'a', 'theta' or 'both', got {component!r}")


def random_band_field(grid: Grid, rng, band: int, amplitude: float) -> RealField:
    """Mean-free random field supported on modes with every |m_j| <= band,
    rescaled to peak amplitude."""
    if isinstance(rng, (int, np.integer)):
        rng = rng_for(rng)
    if band < 1:
        raise ValueError(f"band must be >= 1, got {band}")
    if band > grid.n // 2 - 1:
        raise ValueError(f"band {band} exceeds the lattice (n = {grid.n})")
    noise = rng.standard_normal(grid.shape)
    coef = grid.fft(noise)
    mask = np.ones(grid.shape, dtype=bool)
    for j in range(grid.d):
        shape = [1] * grid.d
        shape[j] = grid.n
        mask &= np.abs(grid.modes.reshape(shape)) <= band
    mask[(0,) * grid.d] = False
    values = grid.ifft(coef * mask)
    peak = float(np.abs(values).max())
    if peak == 0.0:
        raise ValueError("degenerate random draw")
    return RealField(grid, values * (amplitude / peak))


def random_band_state(
    grid: Grid, seed: int, band: int, amplitude: float, component: str = "both"
) -> AState:
    zero = RealField(grid, np.zeros(grid.shape))
    if component == "a":
        return AState(random_band_field(grid, rng_for(seed, 1), band, amplitude), zero)
    if component == "theta":
        return AState(zero, random_band_field(grid, rng_for(seed, 2), band, amplitude))
    if component == "both":
        return AState(
            random_band_field(grid, rng_for(seed, 1), band, amplitude),
            random_band_field(grid, rng_for(seed, 2), band, amplitude),
        )
    raise ValueError(f"component must be 'a', 'theta' or 'both', got {component!r}")
