"""Error types for the extraction pipeline."""


class ExtractorError(ValueError):
    """Base class for extraction failures."""


class ImageDecodeError(ExtractorError):
    """An input file could not be decoded as an image.

    Per-image and recoverable: the batch runner skips the file with a
    warning and omits it from the manifest.
    """
