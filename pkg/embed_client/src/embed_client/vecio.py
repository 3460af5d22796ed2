"""Binary vector file I/O.

Layout (little-endian, no padding, no footer):

    magic   4 bytes  b"XVEC"
    version u32      1
    count   u64      number of rows
    dim     u32      values per row, must be positive
    payload count * dim float32, row-major

This is the exact format the retrieval engine reads and writes; this module
implements it independently so the two packages share nothing but bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, IoFailure, NonFiniteOutput

VEC_MAGIC = b"XVEC"
VEC_VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim


def write_vectors(vectors: np.ndarray, vectors_path) -> None:
    """Write a float32 matrix; rejects non-2-D, zero-dim, and non-finite input."""
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("vectors must be 2-D")
    if arr.shape[1] == 0:
        raise ValueError("dim must be positive")
    finite_rows = np.isfinite(arr).all(axis=1)
    if not finite_rows.all():
        raise NonFiniteOutput(int(np.argmin(finite_rows)))
    header = _HEADER.pack(VEC_MAGIC, VEC_VERSION, arr.shape[0], arr.shape[1])
    try:
        with open(vectors_path, "wb") as f:
            f.write(header)
            f.write(arr.tobytes())
    except OSError as e:
        raise IoFailure(f"cannot write {vectors_path}: {e}") from e


def read_vectors(vectors_path) -> np.ndarray:
    """Read a vector file back into a float32 (count, dim) array."""
    path = Path(vectors_path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, version, count, dim = _HEADER.unpack_from(raw, 0)
    if magic != VEC_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VEC_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim <= 0:
        raise FormatError(f"{path}: non-positive dim {dim}")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, "
            f"expected {count * dim * 4} for count={count} dim={dim}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    finite_rows = np.isfinite(data).all(axis=1)
    if not finite_rows.all():
        raise NonFiniteOutput(int(np.argmin(finite_rows)))
    return np.ascontiguousarray(data, dtype=np.float32)
