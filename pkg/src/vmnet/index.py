"""The persistent database of per-image descriptor triples.

An index is an ordered collection of ``FeatureSet`` records, sorted by
image id (byte order) with unique ids, stored in a single binary file:

    magic "VMIX" | u32 version | u32 last_dim | u32 middle_dim | u64 count
    per entry: u32 id length | UTF-8 id | three float32 LE vectors
               (masked-max, regional, middle)
    u32 CRC32 of everything above

A sidecar JSON manifest records the build configuration, entry count and
timestamp; the binary file itself carries no timestamp so rebuilding from
identical inputs is bit-identical.
"""

from __future__ import annotations

import json
import struct
import zlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .config import EngineConfig
from .descriptors import FeatureSet
from .errors import BuildError, FormatError, IntegrityError
from .tensor import Descriptor

VMIX_MAGIC = b"VMIX"
VMIX_VERSION = 1

ENGINE_VERSION = "0.1.0"


def _id_key(image_id: str) -> bytes:
    return image_id.encode("utf-8")


class Index:
    """Immutable, id-sorted collection of feature sets."""

    __slots__ = ("_entries", "last_dim", "middle_dim", "manifest")

    def __init__(self, entries: list[FeatureSet], manifest: dict | None = None):
        if not entries:
            raise BuildError("index must contain at least one entry")
        entries = sorted(entries, key=lambda e: _id_key(e.image_id))
        last_dim = entries[0].vamac.dim
        middle_dim = entries[0].middle.dim
        prev_key: bytes | None = None
        for e in entries:
            key = _id_key(e.image_id)
            if key == prev_key:
                raise BuildError(f"duplicate id: {e.image_id}")
            prev_key = key
            if e.vamac.dim != last_dim or e.middle.dim != middle_dim:
                raise BuildError(
                    f"entry {e.image_id!r} has dims ({e.vamac.dim}, {e.middle.dim}), "
                    f"index has ({last_dim}, {middle_dim})"
                )
        self._entries = tuple(entries)
        self.last_dim = last_dim
        self.middle_dim = middle_dim
        self.manifest = dict(manifest) if manifest else {}

    @property
    def entries(self) -> tuple[FeatureSet, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other: object) -> bool:
        # The manifest carries build metadata (timestamps), not content, so
        # it is excluded from equality.
        if not isinstance(other, Index):
            return NotImplemented
        return (
            self.last_dim == other.last_dim
            and self.middle_dim == other.middle_dim
            and self._entries == other._entries
        )

    def __hash__(self) -> int:
        raise TypeError("Index is not hashable")

    def __repr__(self) -> str:
        return (
            f"Index(entries={len(self._entries)}, last_dim={self.last_dim}, "
            f"middle_dim={self.middle_dim})"
        )


def build_index(
    feature_sets: Iterable[FeatureSet], config: EngineConfig | None = None
) -> Index:
    """Assemble an index from feature sets in any ingest order.

    The result is canonical: sorted by id regardless of input order.
    Duplicate ids and dimension drift are build errors.
    """
    entries = list(feature_sets)
    manifest = {
        "engine_version": ENGINE_VERSION,
        "format_version": VMIX_VERSION,
        "entry_count": len(entries),
        "config": config.to_dict() if config is not None else None,
        "built_at": datetime.now(timezone.utc).isoformat(),
    }
    return Index(entries, manifest)


def _manifest_path(path: str | Path) -> Path:
    return Path(str(path) + ".manifest.json")


def save_index(ix: Index, path: str | Path) -> None:
    """Write the binary index plus its sidecar JSON manifest."""
    parts = [
        VMIX_MAGIC,
        struct.pack("<III", VMIX_VERSION, ix.last_dim, ix.middle_dim),
        struct.pack("<Q", len(ix)),
    ]
    for e in ix.entries:
        ident = e.image_id.encode("utf-8")
        parts.append(struct.pack("<I", len(ident)))
        parts.append(ident)
        parts.append(e.vamac.values.astype("<f4", copy=False).tobytes())
        parts.append(e.grmaac.values.astype("<f4", copy=False).tobytes())
        parts.append(e.middle.values.astype("<f4", copy=False).tobytes())
    payload = b"".join(parts)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    Path(path).write_bytes(payload + struct.pack("<I", crc))

    manifest = dict(ix.manifest)
    manifest.setdefault("engine_version", ENGINE_VERSION)
    manifest.setdefault("format_version", VMIX_VERSION)
    manifest["entry_count"] = len(ix)
    _manifest_path(path).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_index(path: str | Path) -> Index:
    """Read a binary index, validating the checksum before the entries.

    Header problems (magic, version) raise ``FormatError``; truncation,
    trailing bytes and checksum mismatches raise ``IntegrityError``.
    Structural entry errors (bad ids, ordering, non-unit vectors) can only
    come from a stream that passed the checksum, so they are format errors
    in a file written that way on purpose.  The sidecar manifest is restored
    when present.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != VMIX_MAGIC:
        raise FormatError(f"{path}: bad magic, expected {VMIX_MAGIC!r}")
    if len(raw) < 28:  # header plus the trailing checksum
        raise IntegrityError(f"{path}: truncated header")
    version, last_dim, middle_dim = struct.unpack_from("<III", raw, 4)
    if version != VMIX_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if last_dim == 0 or middle_dim == 0:
        raise FormatError(f"{path}: zero descriptor dim ({last_dim}, {middle_dim})")
    (count,) = struct.unpack_from("<Q", raw, 16)
    if count == 0:
        raise FormatError(f"{path}: empty index")

    # Integrity before semantics: no entry is parsed from a corrupt stream.
    payload_end = len(raw) - 4
    (stored_crc,) = struct.unpack_from("<I", raw, payload_end)
    actual_crc = zlib.crc32(raw[:payload_end]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise IntegrityError(
            f"{path}: checksum mismatch, stored {stored_crc:#010x}, "
            f"computed {actual_crc:#010x}"
        )
    offset = 24
    vec_bytes = 4 * (2 * last_dim + middle_dim)
    entries: list[FeatureSet] = []
    for _ in range(count):
        if offset + 4 > payload_end:
            raise IntegrityError(f"{path}: truncated at entry {len(entries)}")
        (id_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if id_len == 0:
            raise FormatError(f"{path}: empty id at entry {len(entries)}")
        if offset + id_len + vec_bytes > payload_end:
            raise IntegrityError(f"{path}: truncated at entry {len(entries)}")
        try:
            image_id = raw[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: invalid UTF-8 id at entry {len(entries)}") from exc
        offset += id_len
        vamac = np.frombuffer(raw, dtype="<f4", count=last_dim, offset=offset)
        offset += 4 * last_dim
        grmaac = np.frombuffer(raw, dtype="<f4", count=last_dim, offset=offset)
        offset += 4 * last_dim
        middle = np.frombuffer(raw, dtype="<f4", count=middle_dim, offset=offset)
        offset += 4 * middle_dim
        try:
            entries.append(
                FeatureSet(
                    image_id,
                    Descriptor(vamac),
                    Descriptor(grmaac),
                    Descriptor(middle),
                )
            )
        except ValueError as exc:
            raise FormatError(f"{path}: entry {image_id!r}: {exc}") from exc

    if offset != payload_end:
        raise IntegrityError(f"{path}: trailing bytes after last entry")

    keys = [_id_key(e.image_id) for e in entries]
    if any(keys[i] >= keys[i + 1] for i in range(len(keys) - 1)):
        raise FormatError(f"{path}: entries are not sorted by unique id")

    manifest: dict = {}
    mpath = _manifest_path(path)
    if mpath.exists():
        try:
            manifest = json.loads(mpath.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            manifest = {}
    return Index(entries, manifest)
