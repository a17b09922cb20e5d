"""Baseline saliency: smoothed luminance contrast.

This is a stand-in for a trained salient-object-detection model: the
absolute deviation of blurred luminance from its image-wide mean,
normalized to [0, 1]. It highlights regions that differ in brightness
from the scene average — a crude but deterministic proxy marked as
*degraded* in the outputs so consumers know a learned model did not
produce it.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

SALIENCY_MODEL = "luminance-contrast"
SALIENCY_DEGRADED = True

# Rec. 709 luma coefficients.
_LUMA = np.array([0.2126, 0.7152, 0.0722], dtype=np.float64)


def luminance_contrast(rgb: np.ndarray) -> np.ndarray:
    """Map an (H, W, 3) image with values in [0, 1] to an (H, W) saliency plane.

    The result is float32 in [0, 1]; a perfectly flat image maps to all
    zeros.
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {rgb.shape}")
    lum = np.asarray(rgb, dtype=np.float64) @ _LUMA
    sigma = max(1.0, min(lum.shape) / 32.0)
    blur = ndimage.gaussian_filter(lum, sigma=sigma, mode="nearest")
    contrast = np.abs(blur - blur.mean())
    peak = contrast.max()
    if peak > 0:
        contrast /= peak
    return np.clip(contrast, 0.0, 1.0).astype(np.float32)
