"""Binary field snapshots.

Little-endian layout: magic "FRSC", u32 version, u32 d, u32 N, u32 M,
f64 L, f64 T, then M * N^d complex128 values, row-major, time-major.
Time nodes are the uniform grid linspace(0, T, M).
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import ConfigError, FieldPath, GridSpec

MAGIC = b"FRSC"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")


def write_snapshot(path, fp: FieldPath) -> None:
    grid = fp.grid
    if len(fp.times) < 2:
        raise ConfigError("snapshots require at least 2 time nodes")
    expected = np.linspace(0.0, fp.times[-1], len(fp.times))
    if fp.times[-1] <= 0 or not np.allclose(fp.times, expected, rtol=0.0, atol=1e-12):
        raise ConfigError("snapshots require a uniform time grid starting at 0")
    header = _HEADER.pack(MAGIC, VERSION, grid.d, grid.N, len(fp.times), grid.L, float(fp.times[-1]))
    data = np.ascontiguousarray(fp.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_snapshot(path) -> FieldPath:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, d, N, M, L, T = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ConfigError(f"bad snapshot magic {magic!r}")
        if version != VERSION:
            raise ConfigError(f"unsupported snapshot version {version}")
        count = M * N**d
        data = np.frombuffer(fh.read(16 * count), dtype="<c16", count=count)
    grid = GridSpec(d, N, L, T, M)
    times = np.linspace(0.0, T, M)
    values = data.reshape((M,) + (N,) * d).astype(np.complex128)
    return FieldPath(grid, times, values)
