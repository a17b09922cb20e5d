"""Offline feature extraction: images in, FMAP tensor triples out.

Runs a torchvision backbone over image files, taps two convolutional
stages (a high-resolution middle stage and the final stage), computes a
baseline saliency map, and writes everything as FMAP files plus a build
manifest that downstream retrieval tooling consumes directly.
"""

from .backbone import FeatureBackbone, ModelUnavailableError
from .errors import ExtractorError, ImageDecodeError
from .extract import ExtractionJob, ExtractionResult, run_job
from .fmap import fmap_bytes, write_fmap
from .saliency import SALIENCY_DEGRADED, SALIENCY_MODEL, luminance_contrast

__version__ = "0.1.0"

__all__ = [
    "ExtractionJob",
    "ExtractionResult",
    "ExtractorError",
    "FeatureBackbone",
    "ImageDecodeError",
    "ModelUnavailableError",
    "SALIENCY_DEGRADED",
    "SALIENCY_MODEL",
    "__version__",
    "fmap_bytes",
    "luminance_contrast",
    "run_job",
    "write_fmap",
]
