"""Binary field-snapshot files.

Format THGSNAP1, little-endian:

    bytes 0..7    magic b"THGSNAP1"
    u32           spatial dimension d
    u32           points per axis n
    f64           box length L
    f64           snapshot time
    n^d * f64     field values, row-major axis order

Save followed by load is bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import Grid, RealField, make_grid

MAGIC = b"THGSNAP1"
_HEADER = struct.Struct("<8sIIdd")

__all__ = ["MAGIC", "save_snapshot", "load_snapshot"]


class SnapshotFormatError(ValueError):
    pass


def save_snapshot(f: RealField, time: float, path) -> None:
    grid = f.grid
    header = _HEADER.pack(MAGIC, grid.d, grid.n, grid.L, float(time))
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_snapshot(path, grid: Grid | None = None):
    """Read a snapshot; returns (RealField, time).

    If grid is given, the header must describe the same box.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"file too short for header ({len(raw)} bytes)")
    magic, d, n, L, time = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * n ** d
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"size mismatch: header implies {expected} bytes, file has {len(raw)}"
        )
    if grid is None:
        grid = make_grid(d, n, L)
    elif (grid.d, grid.n) != (d, n) or abs(grid.L - L) > 1e-12 * max(L, 1.0):
        raise SnapshotFormatError(
            f"snapshot grid (d={d}, n={n}, L={L}) does not match expected "
            f"(d={grid.d}, n={grid.n}, L={grid.L})"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(grid.shape)
    return RealField(grid, values.copy()), time
