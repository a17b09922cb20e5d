"""Descriptor aggregation: global masked max, regional multi-pooling, and
the middle-layer supplement.

Three descriptor families are produced per image:

* ``vamac``  -- per-channel spatial max after filtering by the variable
  mask and the saliency mask.
* ``grmaac`` -- a sum of per-window pooled vectors over three window
  scales, each window weighted by its mask coverage, with a different
  pooling operator per scale (average on the largest windows, generalized
  mean on the medium ones, max on the smallest).
* ``middle`` -- the masked-max descriptor recomputed on a middle
  convolutional stage's tensor.

All pooled sums accumulate in float64 and round to float32 only in the
final descriptor, so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import (
    BinaryMask,
    MaskConfig,
    apply_mask,
    binarize_saliency,
    combine,
    variable_mask,
)
from .tensor import Descriptor, FeatureTensor, Plane, l2_normalize

POOLING_ASSIGNMENTS = ("prose", "equation")

# Pooling operator per window scale.  The default ties average pooling to
# the largest windows and max to the smallest; "equation" swaps them and is
# kept selectable for comparison runs.
_MODE_BY_SCALE = {
    "prose": {1: "avg", 2: "lp", 3: "max"},
    "equation": {1: "max", 2: "lp", 3: "avg"},
}


@dataclass(frozen=True)
class Region:
    """A square pooling window on the feature grid.

    ``scale_index`` runs 1..3 from the largest windows to the smallest.
    """

    row0: int
    col0: int
    side: int
    scale_index: int

    def __post_init__(self) -> None:
        if self.row0 < 0 or self.col0 < 0:
            raise ValueError(f"region origin must be non-negative, got {self}")
        if self.side < 1:
            raise ValueError(f"region side must be positive, got {self.side}")
        if self.scale_index not in (1, 2, 3):
            raise ValueError(f"scale index must be 1, 2 or 3, got {self.scale_index}")

    @property
    def area(self) -> int:
        return self.side * self.side


@dataclass(frozen=True)
class PoolingWeights:
    """Per-scale weights and the generalized-mean exponent."""

    q1: float = 0.5
    q2: float = 0.5
    q3: float = 1.0
    p_pool: float = 3.0

    def __post_init__(self) -> None:
        for name in ("q1", "q2", "q3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.q1 > 0 or self.q2 > 0 or self.q3 > 0):
            raise ValueError("at least one scale weight must be positive")
        if self.p_pool < 1:
            raise ValueError(f"p_pool must be >= 1, got {self.p_pool}")

    def q_for_scale(self, scale_index: int) -> float:
        return (self.q1, self.q2, self.q3)[scale_index - 1]


class FeatureSet:
    """The three finished descriptors of one image."""

    __slots__ = ("image_id", "vamac", "grmaac", "middle")

    def __init__(
        self, image_id: str, vamac: Descriptor, grmaac: Descriptor, middle: Descriptor
    ):
        if not image_id:
            raise ValueError("image id must be non-empty")
        if vamac.dim != grmaac.dim:
            raise ValueError(
                f"vamac dim {vamac.dim} != grmaac dim {grmaac.dim}; both come "
                "from the last layer"
            )
        for name, d in (("vamac", vamac), ("grmaac", grmaac), ("middle", middle)):
            if not d.is_unit_or_zero():
                raise ValueError(f"{name} descriptor is neither unit norm nor zero")
        self.image_id = image_id
        self.vamac = vamac
        self.grmaac = grmaac
        self.middle = middle

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (
            self.image_id == other.image_id
            and self.vamac == other.vamac
            and self.grmaac == other.grmaac
            and self.middle == other.middle
        )

    def __hash__(self) -> int:
        raise TypeError("FeatureSet is not hashable")

    def __repr__(self) -> str:
        return (
            f"FeatureSet(id={self.image_id!r}, last_dim={self.vamac.dim}, "
            f"middle_dim={self.middle.dim})"
        )


def mac(t: FeatureTensor) -> Descriptor:
    """Per-channel spatial max, L2-normalized."""
    return l2_normalize(Descriptor(t.data.max(axis=(1, 2))))


def vamac(t: FeatureTensor, vmask: BinaryMask, smask: BinaryMask) -> Descriptor:
    """Masked-max descriptor: filter by both masks, then take ``mac``."""
    return mac(apply_mask(t, combine(vmask, smask)))


def _axis_offsets(extent: int, side: int) -> list[int]:
    """Window origins along one axis.

    A single window at 0 covers the axis when side >= extent.  Otherwise the
    step count m is the smallest integer with (extent - side) / max(m - 1, 1)
    <= 0.6 * side, i.e. consecutive windows overlap by at least 40% of the
    side, and origins are placed uniformly from 0 to extent - side, rounded
    to cells and deduplicated.
    """
    if side >= extent:
        return [0]
    span = extent - side
    m = 1
    while span / max(m - 1, 1) > 0.6 * side:
        m += 1
    reals = np.linspace(0.0, float(span), m)
    seen: dict[int, None] = {}
    for off in np.round(reals).astype(int):
        seen[int(off)] = None
    return list(seen)


def rmac_regions(h: int, w: int) -> list[Region]:
    """Square sliding windows at three scales.

    Scale t in {1, 2, 3} uses side max(1, floor(2 * min(h, w) / (t + 1))),
    so scale 1 windows are the largest.  Ordering is deterministic: scale
    ascending, then row-major within a scale.
    """
    if h < 1 or w < 1:
        raise ValueError(f"grid dims must be positive, got ({h}, {w})")
    regions: list[Region] = []
    for t in (1, 2, 3):
        side = max(1, (2 * min(h, w)) // (t + 1))
        for r0 in _axis_offsets(h, side):
            for c0 in _axis_offsets(w, side):
                regions.append(Region(r0, c0, side, t))
    return regions


def pool_region(
    t: FeatureTensor, r: Region, mode: str, p_pool: float = 3.0
) -> np.ndarray:
    """Pool one window of every channel into a length-C float64 vector.

    ``max`` takes the window maximum, ``avg`` the arithmetic mean over all
    window cells (zeros introduced by masking included), and ``lp`` the
    generalized mean ((1/n) * sum(x ** p)) ** (1/p) with negative
    activations clamped to zero first, since fractional powers of negatives
    are undefined.
    """
    if r.row0 + r.side > t.height or r.col0 + r.side > t.width:
        raise ValueError(f"{r} exceeds grid {t.height}x{t.width}")
    window = t.data[:, r.row0 : r.row0 + r.side, r.col0 : r.col0 + r.side]
    cells = window.reshape(t.channels, -1).astype(np.float64)
    if mode == "max":
        return cells.max(axis=1)
    if mode == "avg":
        return cells.mean(axis=1)
    if mode == "lp":
        return lp_pool(cells, p_pool)
    raise ValueError(f"unknown pooling mode {mode!r}")


def lp_pool(cells: np.ndarray, p_pool: float) -> np.ndarray:
    """Generalized mean over the last axis, clamping negatives to zero."""
    clamped = np.clip(np.asarray(cells, dtype=np.float64), 0.0, None)
    return np.mean(clamped**p_pool, axis=-1) ** (1.0 / p_pool)


def grmaac(
    t: FeatureTensor,
    vmask: BinaryMask,
    smask: BinaryMask,
    weights: PoolingWeights,
    assignment: str = "prose",
) -> Descriptor:
    """Regional multi-pooling descriptor with mask-coverage window weights.

    Average pooling reads the tensor filtered by both masks, since large
    windows admit the most background; generalized-mean and max pooling read
    the tensor filtered by the variable mask alone.  Each window's pooled
    vector is scaled by q_t for its scale times the fraction of the window
    the variable mask covers, all vectors are summed, and the sum is
    L2-normalized.
    """
    if assignment not in _MODE_BY_SCALE:
        raise ValueError(
            f"pooling assignment must be one of {POOLING_ASSIGNMENTS}, got {assignment!r}"
        )
    mode_by_scale = _MODE_BY_SCALE[assignment]
    filtered_both = apply_mask(t, combine(vmask, smask))
    filtered_var = apply_mask(t, vmask)
    coverage_bits = vmask.bits
    acc = np.zeros(t.channels, dtype=np.float64)
    for region in rmac_regions(t.height, t.width):
        q = weights.q_for_scale(region.scale_index)
        if q == 0.0:
            continue
        window_bits = coverage_bits[
            region.row0 : region.row0 + region.side,
            region.col0 : region.col0 + region.side,
        ]
        coverage = float(window_bits.sum(dtype=np.int64)) / region.area
        if coverage == 0.0:
            continue
        mode = mode_by_scale[region.scale_index]
        source = filtered_both if mode == "avg" else filtered_var
        acc += q * coverage * pool_region(source, region, mode, weights.p_pool)
    return l2_normalize(Descriptor(acc.astype(np.float32)))


def middle_descriptor(
    mid: FeatureTensor, raw_saliency: Plane, cfg: MaskConfig
) -> Descriptor:
    """Masked-max descriptor on the middle layer.

    The variable mask is recomputed from the middle tensor itself and the
    raw saliency map is resampled to the middle grid, so the middle
    descriptor is self-contained.
    """
    vmask = variable_mask(mid, cfg.p)
    smask = binarize_saliency(raw_saliency, mid.height, mid.width, cfg.saliency_threshold)
    return vamac(mid, vmask, smask)


def extract_feature_set(
    image_id: str,
    last: FeatureTensor,
    mid: FeatureTensor,
    raw_saliency: Plane,
    mask_cfg: MaskConfig,
    weights: PoolingWeights,
    assignment: str = "prose",
) -> FeatureSet:
    """Compute all three descriptors of one image.

    The variable mask and the resampled saliency mask are shared between the
    two last-layer descriptors; the middle descriptor derives its own masks
    at the middle grid's resolution.
    """
    vmask = variable_mask(last, mask_cfg.p)
    smask = binarize_saliency(
        raw_saliency, last.height, last.width, mask_cfg.saliency_threshold
    )
    return FeatureSet(
        image_id,
        vamac=vamac(last, vmask, smask),
        grmaac=grmaac(last, vmask, smask, weights, assignment),
        middle=middle_descriptor(mid, raw_saliency, mask_cfg),
    )
