"""Error types raised by the engine.

All of them derive from ValueError so callers that do not care about the
distinction can catch one base class.
"""


class FormatError(ValueError):
    """A file does not conform to its declared binary or text format.

    Raised for bad magic bytes, unsupported versions, malformed headers,
    out-of-range dimensions and truncated FMAP payloads.
    """


class IntegrityError(ValueError):
    """A structurally valid file fails an integrity check.

    Raised for truncated index files and checksum mismatches.
    """


class BuildError(ValueError):
    """The index build rejected its input (duplicate ids, dim drift)."""
