"""Core dense types and the FMAP interchange format.

Three value types are shared by every other module:

* ``FeatureTensor`` -- a C x H x W stack of float32 activation maps.
* ``Plane``         -- a single H x W float map (channel sums, raw saliency).
* ``Descriptor``    -- a 1-D float32 vector, unit L2 norm or all zero.

FMAP is the on-disk layout for tensors: a small header followed by the raw
float32 payload, little-endian throughout, so a saved tensor round-trips
bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1

# Guard against absurd headers before allocating: dims whose product would
# exceed this payload size are rejected as corrupt rather than attempted.
_MAX_PAYLOAD_BYTES = 1 << 40

_NORM_EPS = 1e-12


def _require_finite(data: np.ndarray, what: str) -> None:
    if not np.isfinite(data).all():
        raise ValueError(f"{what} contains non-finite values")


class FeatureTensor:
    """Immutable C x H x W stack of float32 activation maps."""

    __slots__ = ("_data",)

    def __init__(self, data: np.ndarray):
        # Own the buffer: callers keep their arrays mutable, we keep ours frozen.
        arr = np.array(data, dtype=np.float32, order="C")
        if arr.ndim != 3:
            raise ValueError(f"feature tensor must be 3-D, got shape {arr.shape}")
        if 0 in arr.shape:
            raise ValueError(f"feature tensor dims must be positive, got {arr.shape}")
        _require_finite(arr, "feature tensor")
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def channels(self) -> int:
        return self._data.shape[0]

    @property
    def height(self) -> int:
        return self._data.shape[1]

    @property
    def width(self) -> int:
        return self._data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self._data.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(
            np.array_equal(self._data, other._data)
        )

    def __hash__(self) -> int:  # immutable, but hashing whole tensors is a bug
        raise TypeError("FeatureTensor is not hashable")

    def __repr__(self) -> str:
        c, h, w = self._data.shape
        return f"FeatureTensor(C={c}, H={h}, W={w})"


class Plane:
    """Immutable H x W float64 map used for channel sums and raw saliency."""

    __slots__ = ("_data",)

    def __init__(self, data: np.ndarray):
        arr = np.array(data, dtype=np.float64, order="C")
        if arr.ndim != 2:
            raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
        if 0 in arr.shape:
            raise ValueError(f"plane dims must be positive, got {arr.shape}")
        _require_finite(arr, "plane")
        arr.flags.writeable = False
        self._data = arr

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def width(self) -> int:
        return self._data.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(
            np.array_equal(self._data, other._data)
        )

    def __hash__(self) -> int:
        raise TypeError("Plane is not hashable")

    def __repr__(self) -> str:
        h, w = self._data.shape
        return f"Plane(H={h}, W={w})"


class Descriptor:
    """Immutable 1-D float32 vector.

    Finiteness is enforced here; the unit-norm-or-zero invariant is enforced
    where finished descriptors are assembled (see ``FeatureSet``), because
    ``l2_normalize`` legitimately accepts unnormalized input.
    """

    __slots__ = ("_values",)

    def __init__(self, values: np.ndarray):
        arr = np.array(values, dtype=np.float32, order="C")
        if arr.ndim != 1:
            raise ValueError(f"descriptor must be 1-D, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise ValueError("descriptor dim must be positive")
        _require_finite(arr, "descriptor")
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return self._values.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self._values.astype(np.float64)))

    def is_zero(self) -> bool:
        return not self._values.any()

    def is_unit_or_zero(self, tol: float = 1e-6) -> bool:
        return self.is_zero() or abs(self.norm() - 1.0) <= tol

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Descriptor):
            return NotImplemented
        return bool(np.array_equal(self._values, other._values))

    def __hash__(self) -> int:
        raise TypeError("Descriptor is not hashable")

    def __repr__(self) -> str:
        return f"Descriptor(dim={self.dim})"


def l2_normalize(v: Descriptor) -> Descriptor:
    """Scale a descriptor to unit L2 norm.

    Vectors with norm below 1e-12 are returned as the all-zero descriptor so
    that fully masked-out inputs can never trigger a division by zero.
    """
    vals = v.values.astype(np.float64)
    n = float(np.linalg.norm(vals))
    if n <= _NORM_EPS:
        return Descriptor(np.zeros(v.dim, dtype=np.float32))
    return Descriptor((vals / n).astype(np.float32))


def bilinear_resize(src: Plane, out_h: int, out_w: int) -> Plane:
    """Resample a plane with pixel-center bilinear interpolation.

    Uses the align-corners=false convention: output pixel (i, j) samples the
    source at ((i + 0.5) * H / out_h - 0.5, (j + 0.5) * W / out_w - 0.5), with
    border samples replicated for coordinates that fall outside the grid.
    Every output value is a convex combination of source samples, so the
    output range never exceeds the source range.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target dims must be positive, got ({out_h}, {out_w})")
    data = src.data
    h, w = data.shape
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    # Clamped fractions replicate the border instead of extrapolating.
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    tl = data[np.ix_(y0c, x0c)]
    tr = data[np.ix_(y0c, x1c)]
    bl = data[np.ix_(y1c, x0c)]
    br = data[np.ix_(y1c, x1c)]
    top = tl * (1.0 - fx) + tr * fx
    bot = bl * (1.0 - fx) + br * fx
    return Plane(top * (1.0 - fy) + bot * fy)


def save_tensor(t: FeatureTensor, path: str | Path) -> None:
    """Write a tensor in the FMAP layout.

    Layout: magic "FMAP", u32 version, u32 ndim (always 3), u32 dims C, H, W,
    then C*H*W float32 values row-major, all little-endian.
    """
    header = FMAP_MAGIC + struct.pack(
        "<IIIII", FMAP_VERSION, 3, t.channels, t.height, t.width
    )
    payload = t.data.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def load_tensor(path: str | Path) -> FeatureTensor:
    """Read an FMAP file back into a ``FeatureTensor``.

    Rejects malformed files with a ``FormatError`` naming the offending
    field; ``save_tensor`` followed by ``load_tensor`` is bit-exact.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != FMAP_MAGIC:
        raise FormatError(f"{path}: bad magic, expected {FMAP_MAGIC!r}")
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != FMAP_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if ndim != 3:
        raise FormatError(f"{path}: bad ndim {ndim}, expected 3")
    if len(raw) < 12 + 4 * ndim:
        raise FormatError(f"{path}: truncated dims")
    c, h, w = struct.unpack_from("<III", raw, 12)
    if c == 0 or h == 0 or w == 0:
        raise FormatError(f"{path}: zero dimension in ({c}, {h}, {w})")
    count = c * h * w
    if count * 4 > _MAX_PAYLOAD_BYTES:
        raise FormatError(f"{path}: dim overflow, ({c}, {h}, {w}) is implausibly large")
    body = raw[24:]
    if len(body) < count * 4:
        raise FormatError(
            f"{path}: truncated payload, expected {count} floats, got {len(body) // 4}"
        )
    if len(body) > count * 4:
        raise FormatError(f"{path}: trailing bytes after payload")
    values = np.frombuffer(body, dtype="<f4").reshape(c, h, w)
    try:
        return FeatureTensor(values)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def load_plane(path: str | Path) -> Plane:
    """Read a single-channel FMAP file (raw saliency) as a ``Plane``."""
    t = load_tensor(path)
    if t.channels != 1:
        raise FormatError(f"{path}: expected a single-channel map, got C={t.channels}")
    return Plane(t.data[0])
