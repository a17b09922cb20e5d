"""Image decoding and backbone preprocessing."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError

# Standard channel statistics the torchvision classification models are
# trained with; applied in both weights modes so outputs never depend on
# how the model was initialized.
_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def load_rgb(path: Path, min_side: int = 64) -> np.ndarray:
    """Decode an image file to an (H, W, 3) float32 array in [0, 1].

    Grayscale (and palette/alpha) inputs are converted to 3 channels.
    Images whose short side is below ``min_side`` are upscaled
    (aspect-preserving bilinear) so the backbone's downsampling chain
    never collapses a grid to nothing; larger images keep their size.
    Undecodable files raise :class:`ImageDecodeError`.
    """
    try:
        with Image.open(path) as img:
            img = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"{path}: cannot decode image: {exc}") from exc
    w, h = img.size
    if min(w, h) < min_side:
        scale = min_side / min(w, h)
        img = img.resize(
            (max(min_side, round(w * scale)), max(min_side, round(h * scale))),
            Image.Resampling.BILINEAR,
        )
    return np.asarray(img, dtype=np.float32) / 255.0


def to_network_input(rgb: np.ndarray) -> np.ndarray:
    """Normalize an (H, W, 3) array in [0, 1] to a (3, H, W) network input."""
    return ((rgb - _MEAN) / _STD).transpose(2, 0, 1).copy()
