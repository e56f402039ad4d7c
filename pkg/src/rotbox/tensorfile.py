"""Minimal binary tensor container.

Layout, all little-endian:

    bytes 0..3   magic "RBK1"
    bytes 4..7   ndim as uint32
    then         ndim x uint32 dims
    then         product(dims) float32 values, row-major

Readers reject anything malformed with a typed error instead of guessing.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, DimOverflow, TensorFileError, Truncated

MAGIC = b"RBK1"
MAX_NDIM = 8
MAX_ELEMENTS = 1 << 31


def write_tensor(array, path) -> None:
    """Write a float32 tensor; rejects non-finite values."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite tensor values")
    if arr.ndim > MAX_NDIM:
        raise ValueError(f"too many dimensions ({arr.ndim} > {MAX_NDIM})")
    header = MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a tensor written by write_tensor; raises on any malformation."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r}")
    if len(blob) < 8:
        raise Truncated(f"{path}: header cut short")
    ndim = struct.unpack_from("<I", blob, 4)[0]
    if ndim > MAX_NDIM:
        raise DimOverflow(f"{path}: ndim={ndim} exceeds limit {MAX_NDIM}")
    if len(blob) < 8 + 4 * ndim:
        raise Truncated(f"{path}: dimension list cut short")
    dims = struct.unpack_from(f"<{ndim}I", blob, 8)
    total = 1
    for d in dims:
        total *= d
    if total > MAX_ELEMENTS:
        raise DimOverflow(f"{path}: {total} elements exceed limit {MAX_ELEMENTS}")
    payload = blob[8 + 4 * ndim:]
    if len(payload) < 4 * total:
        raise Truncated(
            f"{path}: payload holds {len(payload)} bytes, need {4 * total}")
    if len(payload) > 4 * total:
        raise TensorFileError(f"{path}: {len(payload) - 4 * total} trailing bytes")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
