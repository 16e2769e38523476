"""VIL1 binary snapshots.

Layout, little-endian and unpadded: the magic ``VIL1``, then ``n`` (uint32),
``L`` (float64), ``t`` (float64), ``kind`` (uint8; 0 scalar, 1 vector), then
n·n float64 values in row-major order (twice for a vector field).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import GridSpec, ScalarField, VectorField

__all__ = ["write_vil", "read_vil", "encode", "decode", "VilError"]

MAGIC = b"VIL1"
_HEAD = struct.Struct("<4sIddB")
SCALAR, VECTOR = 0, 1


class VilError(ValueError):
    pass


def encode(f: ScalarField | VectorField, t: float = 0.0) -> bytes:
    if isinstance(f, ScalarField):
        kind, parts = SCALAR, [f.values]
    elif isinstance(f, VectorField):
        kind, parts = VECTOR, [f.u1, f.u2]
    else:
        raise TypeError(f"cannot encode {type(f).__name__}")
    g = f.grid
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in parts)
    return _HEAD.pack(MAGIC, g.n, float(g.L), float(t), kind) + body


def decode(data: bytes):
    """Returns (field, t)."""
    if len(data) < _HEAD.size:
        raise VilError("truncated header")
    magic, n, L, t, kind = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise VilError(f"bad magic {magic!r}")
    if kind not in (SCALAR, VECTOR):
        raise VilError(f"unknown kind {kind}")
    count = n * n * (1 + kind)
    if len(data) != _HEAD.size + 8 * count:
        raise VilError(f"expected {count} values, file holds {(len(data) - _HEAD.size) / 8:g}")
    vals = np.frombuffer(data, dtype="<f8", offset=_HEAD.size).reshape(1 + kind, n, n)
    grid = GridSpec(L, n)
    if kind == SCALAR:
        return ScalarField(grid, vals[0].astype(float)), t
    return VectorField(grid, vals[0].astype(float), vals[1].astype(float)), t


def write_vil(path, f: ScalarField | VectorField, t: float = 0.0) -> Path:
    path = Path(path)
    path.write_bytes(encode(f, t))
    return path


def read_vil(path):
    return decode(Path(path).read_bytes())
