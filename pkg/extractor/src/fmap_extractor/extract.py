"""Batch extraction: image files in, FMAP triples + build manifest out."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .backbone import FeatureBackbone
from .errors import ImageDecodeError
from .fmap import atomic_write_bytes, write_fmap
from .images import load_rgb, to_network_input
from .saliency import SALIENCY_DEGRADED, SALIENCY_MODEL, luminance_contrast

MANIFEST_NAME = "manifest.json"
META_NAME = "extraction_meta.json"


@dataclass(frozen=True)
class ExtractionJob:
    """Everything one batch run needs.

    ``images`` become manifest ids via their filename stems, so stems
    must be unique across the job. ``weights`` is ``"pretrained"`` or
    ``"random"`` (seeded); both run deterministically.
    """

    images: tuple[Path, ...]
    out_dir: Path
    backbone: str = "resnet18"
    weights: str = "random"
    seed: int = 0
    middle_tap: str = "layer3"
    last_tap: str = "layer4"
    min_side: int = 64


@dataclass(frozen=True)
class ExtractionResult:
    manifest_path: Path
    meta_path: Path
    written: tuple[str, ...] = field(default_factory=tuple)
    skipped: tuple[str, ...] = field(default_factory=tuple)


def _warn_stderr(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def run_job(job: ExtractionJob, warn: Callable[[str], None] = _warn_stderr) -> ExtractionResult:
    """Extract every decodable image in the job and write the manifest.

    Per image, three files land in ``out_dir``: ``<id>_last.fmap``,
    ``<id>_middle.fmap`` and ``<id>_saliency.fmap``, plus one
    ``manifest.json`` listing all successful images (paths relative to
    the manifest) and one ``extraction_meta.json`` describing how they
    were produced. Undecodable images are skipped with a warning and
    omitted from the manifest; an unavailable model, duplicate ids, or a
    batch with no decodable image at all is fatal. Every write is
    atomic, and the outputs carry no timestamps, so rerunning the same
    job produces bit-identical files.
    """
    images = [Path(p) for p in job.images]
    if not images:
        raise ValueError("no input images given")
    ids = [p.stem for p in images]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ValueError(f"duplicate image ids (filename stems): {', '.join(dupes)}")

    backbone = FeatureBackbone(
        job.backbone, job.weights, job.seed, job.middle_tap, job.last_tap
    )
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries: list[dict] = []
    skipped: list[str] = []
    for image_id, path in zip(ids, images):
        try:
            rgb = load_rgb(path, job.min_side)
        except ImageDecodeError as exc:
            warn(f"skipping {image_id!r}: {exc}")
            skipped.append(image_id)
            continue
        last, middle = backbone.feature_maps(to_network_input(rgb))
        if middle.shape[1] < last.shape[1] or middle.shape[2] < last.shape[2]:
            raise ValueError(
                f"middle tap {job.middle_tap!r} grid {middle.shape[1:]} is smaller "
                f"than last tap {job.last_tap!r} grid {last.shape[1:]}; "
                "the middle tap must be an earlier stage"
            )
        saliency = luminance_contrast(rgb)[None, :, :]

        names = {
            "last": f"{image_id}_last.fmap",
            "middle": f"{image_id}_middle.fmap",
            "saliency": f"{image_id}_saliency.fmap",
        }
        write_fmap(last, out_dir / names["last"])
        write_fmap(middle, out_dir / names["middle"])
        write_fmap(saliency, out_dir / names["saliency"])
        entries.append(
            {
                "id": image_id,
                **names,
                "saliency_model": f"{SALIENCY_MODEL} (degraded)"
                if SALIENCY_DEGRADED
                else SALIENCY_MODEL,
            }
        )

    if not entries:
        raise ValueError("no input image could be decoded; nothing to write")

    manifest_path = out_dir / MANIFEST_NAME
    atomic_write_bytes(
        manifest_path, (json.dumps(entries, indent=2, sort_keys=True) + "\n").encode()
    )
    meta = {
        "backbone": job.backbone,
        "weights": job.weights,
        "seed": job.seed,
        "taps": {"middle": job.middle_tap, "last": job.last_tap},
        "min_side": job.min_side,
        "saliency": {"model": SALIENCY_MODEL, "degraded": SALIENCY_DEGRADED},
        "images_written": [e["id"] for e in entries],
        "images_skipped": skipped,
    }
    meta_path = out_dir / META_NAME
    atomic_write_bytes(
        meta_path, (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode()
    )
    return ExtractionResult(
        manifest_path=manifest_path,
        meta_path=meta_path,
        written=tuple(e["id"] for e in entries),
        skipped=tuple(skipped),
    )
