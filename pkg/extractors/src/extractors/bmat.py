"""Writer for the encoding pipeline's BMAT matrix format.

Layout (the pipeline's documented external interface): magic b"BMAT",
u32 version 1, u64 rows, u64 cols, row-major little-endian f32.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sIQQ")


def write_bmat(path: str | Path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"BMAT", 1, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())
