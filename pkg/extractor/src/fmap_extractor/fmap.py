"""FMAP writer.

Layout: magic ``FMAP``, u32 version, u32 ndim (always 3), u32 dims
C/H/W, then C*H*W little-endian float32 values in row-major order.
Written bytes round-trip bit-exactly through the retrieval engine's
loader. Writes are atomic (temp file in the target directory, then
rename) so a concurrent reader never sees a partial tensor.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FMAP"
VERSION = 1


def fmap_bytes(arr: np.ndarray) -> bytes:
    """Serialize a (C, H, W) float array to FMAP bytes."""
    out = np.ascontiguousarray(arr, dtype="<f4")
    if out.ndim != 3:
        raise ValueError(f"expected a 3-d (C, H, W) array, got ndim={out.ndim}")
    if min(out.shape) < 1:
        raise ValueError(f"zero-sized dimension in shape {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError("payload contains non-finite values")
    c, h, w = out.shape
    header = MAGIC + struct.pack("<IIIII", VERSION, 3, c, h, w)
    return header + out.tobytes()


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write bytes to ``path`` via a same-directory temp file + rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def write_fmap(arr: np.ndarray, path: Path) -> None:
    """Atomically write a (C, H, W) float array as an FMAP file."""
    atomic_write_bytes(Path(path), fmap_bytes(arr))
