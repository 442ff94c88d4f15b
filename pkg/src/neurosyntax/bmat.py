"""BMAT matrix serialization.

Layout: magic b"BMAT", u32 version (=1), u64 rows, u64 cols, then
row-major little-endian f32 payload.  CSV is accepted as a fallback on
ingest so hand-made fixtures stay easy to write.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"BMAT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class BmatError(ValueError):
    pass


def write_bmat(path: str | Path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise BmatError(f"expected a 2-D matrix, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_bmat(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise BmatError(f"{path}: truncated header")
        magic, version, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise BmatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise BmatError(f"{path}: unsupported version {version}")
        payload = fh.read(rows * cols * 4)
    if len(payload) != rows * cols * 4:
        raise BmatError(f"{path}: payload shorter than {rows}x{cols} f32")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)


def read_matrix(path: str | Path) -> np.ndarray:
    """Read a matrix from BMAT, or from CSV when the file is not BMAT."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_bmat(path)
    values = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    return values
