"""Command-line entry point: ``fmap-extract``."""

from __future__ import annotations

from pathlib import Path

import click

from .backbone import ModelUnavailableError
from .extract import ExtractionJob, run_job


@click.command()
@click.argument(
    "images",
    nargs=-1,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path),
              help="Output directory for FMAP files, manifest.json and extraction_meta.json.")
@click.option("--backbone", default="resnet18", show_default=True,
              envvar="FMAP_BACKBONE", help="torchvision model identifier.")
@click.option("--weights", default="random", show_default=True,
              type=click.Choice(["pretrained", "random"]), envvar="FMAP_WEIGHTS",
              help="Checkpoint source: packaged default weights, or a seeded random init.")
@click.option("--seed", default=0, show_default=True, type=int, envvar="FMAP_SEED",
              help="Seed for --weights=random.")
@click.option("--middle-tap", default="layer3", show_default=True, envvar="FMAP_MIDDLE_TAP",
              help="Earlier (higher-resolution) stage to tap.")
@click.option("--last-tap", default="layer4", show_default=True, envvar="FMAP_LAST_TAP",
              help="Final convolutional stage to tap.")
@click.option("--min-side", default=64, show_default=True, type=int, envvar="FMAP_MIN_SIDE",
              help="Upscale images whose short side is below this many pixels.")
def main(images: tuple[Path, ...], out_dir: Path, backbone: str, weights: str,
         seed: int, middle_tap: str, last_tap: str, min_side: int) -> None:
    """Extract last/middle feature maps and a saliency plane per IMAGE.

    Writes three FMAP files per decodable image plus a manifest for the
    retrieval engine's index builder. Undecodable images are skipped
    with a warning; a missing model is fatal.
    """
    if min_side < 1:
        raise click.ClickException(f"--min-side must be >= 1, got {min_side}")
    job = ExtractionJob(
        images=tuple(images),
        out_dir=out_dir,
        backbone=backbone,
        weights=weights,
        seed=seed,
        middle_tap=middle_tap,
        last_tap=last_tap,
        min_side=min_side,
    )
    try:
        result = run_job(job)
    except (ModelUnavailableError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(
        f"extracted {len(result.written)} images "
        f"({len(result.skipped)} skipped) -> {result.manifest_path}"
    )
