"""Binary spatial masks: the variable attention mask and the saliency mask.

The variable mask thresholds the channel sum of a feature tensor at a
shifted generalized mean controlled by an exponent ``p``; larger ``p``
pushes the threshold toward the maximum and shrinks the mask.  The saliency
mask binarizes an externally produced saliency map after resampling it to
the feature-map grid.  Both are plain {0, 1} matrices applied to tensors by
elementwise multiplication.

Every operation here guarantees it never returns an all-zero mask: a mask
that would select nothing falls back to all-ones so downstream pooling
cannot collapse to a zero descriptor on degenerate input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FeatureTensor, Plane, bilinear_resize


class BinaryMask:
    """Immutable H x W matrix with entries in {0, 1}."""

    __slots__ = ("_bits",)

    def __init__(self, bits: np.ndarray):
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        if 0 in arr.shape:
            raise ValueError(f"mask dims must be positive, got {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        arr = arr.astype(np.uint8)  # astype copies, so the buffer is ours
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def ones(cls, height: int, width: int) -> "BinaryMask":
        return cls(np.ones((height, width), dtype=np.uint8))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def height(self) -> int:
        return self._bits.shape[0]

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    def count(self) -> int:
        """Number of selected cells."""
        return int(self._bits.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(
            np.array_equal(self._bits, other._bits)
        )

    def __hash__(self) -> int:
        raise TypeError("BinaryMask is not hashable")

    def __repr__(self) -> str:
        return f"BinaryMask(H={self.height}, W={self.width}, on={self.count()})"


@dataclass(frozen=True)
class MaskConfig:
    """Parameters of mask generation.

    ``p`` is the variable-mask exponent; ``saliency_threshold`` binarizes
    the resampled saliency map.
    """

    p: float = 1.0
    saliency_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise ValueError(f"mask exponent p must be > 0, got {self.p}")
        if not 0.0 <= self.saliency_threshold <= 1.0:
            raise ValueError(
                f"saliency threshold must be in [0, 1], got {self.saliency_threshold}"
            )


def channel_sum(t: FeatureTensor) -> Plane:
    """Sum the tensor over channels, accumulating in float64."""
    return Plane(t.data.sum(axis=0, dtype=np.float64))


def variable_mask(t: FeatureTensor, p: float) -> BinaryMask:
    """Threshold the channel sum at a shifted generalized mean.

    With A the channel sum and minA its minimum, the threshold is

        T = (mean((A - minA) ** p)) ** (1 / p) + minA

    and a cell is selected iff A > T strictly.  Subtracting minA keeps the
    mean's base non-negative, so fractional exponents are safe.  A constant
    A selects nothing under the strict comparison and falls back to the
    all-ones mask.
    """
    if not p > 0:
        raise ValueError(f"mask exponent p must be > 0, got {p}")
    a = t.data.sum(axis=0, dtype=np.float64)
    min_a = a.min()
    threshold = np.mean((a - min_a) ** p) ** (1.0 / p) + min_a
    bits = (a > threshold).astype(np.uint8)
    if not bits.any():
        return BinaryMask.ones(t.height, t.width)
    return BinaryMask(bits)


def binarize_saliency(
    raw: Plane, target_h: int, target_w: int, threshold: float
) -> BinaryMask:
    """Resample a raw saliency map to the feature grid, then binarize.

    Values are clamped into [0, 1] before resampling; a cell is selected iff
    its resampled value is >= threshold.  Resampling happens first so the
    threshold is applied exactly once.  An empty result falls back to the
    all-ones mask.
    """
    clamped = Plane(np.clip(raw.data, 0.0, 1.0))
    resized = bilinear_resize(clamped, target_h, target_w)
    bits = (resized.data >= threshold).astype(np.uint8)
    if not bits.any():
        return BinaryMask.ones(target_h, target_w)
    return BinaryMask(bits)


def combine(m1: BinaryMask, m2: BinaryMask) -> BinaryMask:
    """Elementwise AND of two masks (sequential filtering)."""
    if (m1.height, m1.width) != (m2.height, m2.width):
        raise ValueError(
            f"mask dims differ: {m1.height}x{m1.width} vs {m2.height}x{m2.width}"
        )
    bits = m1.bits * m2.bits
    if not bits.any():
        return BinaryMask.ones(m1.height, m1.width)
    return BinaryMask(bits)


def apply_mask(t: FeatureTensor, m: BinaryMask) -> FeatureTensor:
    """Multiply every channel of the tensor elementwise by the mask."""
    if (t.height, t.width) != (m.height, m.width):
        raise ValueError(
            f"mask dims {m.height}x{m.width} do not match tensor "
            f"{t.height}x{t.width}"
        )
    return FeatureTensor(t.data * m.bits[None, :, :])
