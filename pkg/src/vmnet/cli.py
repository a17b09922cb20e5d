"""Command-line surface: offline index build, online query, evaluation and
mask inspection.

Every tunable is a flag with a ``VMNET_``-prefixed environment variable as
fallback; there are no hidden config files.  Manifest paths are resolved
relative to the manifest file's directory.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .config import EngineConfig
from .descriptors import extract_feature_set
from .evaluation import format_report, parse_qrels, parse_run
from .index import build_index, load_index, save_index
from .masks import variable_mask
from .retrieval import format_hits, rank_topk
from .tensor import FeatureTensor, load_plane, load_tensor, save_tensor


def _config_options(include_k: bool = False):
    """Shared tunable flags; defaults come from ``EngineConfig``."""
    base = EngineConfig()
    opts = [
        click.option("--p", type=float, default=base.p, show_default=True,
                     envvar="VMNET_P", help="Variable-mask exponent."),
        click.option("--q1", type=float, default=base.q1, show_default=True,
                     envvar="VMNET_Q1", help="Weight of the largest-window scale."),
        click.option("--q2", type=float, default=base.q2, show_default=True,
                     envvar="VMNET_Q2", help="Weight of the medium-window scale."),
        click.option("--q3", type=float, default=base.q3, show_default=True,
                     envvar="VMNET_Q3", help="Weight of the smallest-window scale."),
        click.option("--p-pool", type=float, default=base.p_pool, show_default=True,
                     envvar="VMNET_P_POOL", help="Generalized-mean pooling exponent."),
        click.option("--p-s1", type=float, default=base.p_s1, show_default=True,
                     envvar="VMNET_P_S1", help="Fusion weight of the masked-max similarity."),
        click.option("--p-s2", type=float, default=base.p_s2, show_default=True,
                     envvar="VMNET_P_S2", help="Fusion weight of the regional similarity."),
        click.option("--p-s3", type=float, default=base.p_s3, show_default=True,
                     envvar="VMNET_P_S3", help="Fusion weight of the middle similarity."),
        click.option("--saliency-threshold", type=float, default=base.saliency_threshold,
                     show_default=True, envvar="VMNET_SALIENCY_THRESHOLD",
                     help="Binarization threshold for resampled saliency."),
        click.option("--pooling-assignment", type=click.Choice(["prose", "equation"]),
                     default=base.pooling_assignment, show_default=True,
                     envvar="VMNET_POOLING_ASSIGNMENT",
                     help="Which window scale gets which pooling operator."),
    ]
    if include_k:
        opts.append(
            click.option("--k", type=int, default=base.k, show_default=True,
                         envvar="VMNET_K", help="Number of results per query.")
        )

    def wrap(f):
        for opt in reversed(opts):
            f = opt(f)
        return f

    return wrap


def _build_config(**kwargs) -> EngineConfig:
    try:
        return EngineConfig(
            p=kwargs["p"],
            q1=kwargs["q1"],
            q2=kwargs["q2"],
            q3=kwargs["q3"],
            p_pool=kwargs["p_pool"],
            p_s1=kwargs["p_s1"],
            p_s2=kwargs["p_s2"],
            p_s3=kwargs["p_s3"],
            saliency_threshold=kwargs["saliency_threshold"],
            k=kwargs.get("k", EngineConfig().k),
            pooling_assignment=kwargs["pooling_assignment"],
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))


@click.group()
def main() -> None:
    """Masked multi-descriptor image retrieval over feature-map files."""


def _read_manifest(manifest_path: Path) -> list[dict]:
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"{manifest_path}: invalid JSON: {exc}")
    if not isinstance(doc, list):
        raise click.ClickException(f"{manifest_path}: expected a JSON list of entries")
    entries = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise click.ClickException(f"{manifest_path}: entry {i} is not an object")
        missing = [key for key in ("id", "last", "middle", "saliency") if key not in item]
        if missing:
            raise click.ClickException(
                f"{manifest_path}: entry {i} missing keys: {', '.join(missing)}"
            )
        entries.append(item)
    if not entries:
        raise click.ClickException(f"{manifest_path}: manifest lists no images")
    return entries


def _extract_one(item: dict, root: Path, config: EngineConfig):
    image_id = str(item["id"])
    paths = {}
    for key in ("last", "middle", "saliency"):
        path = Path(item[key])
        if not path.is_absolute():
            path = root / path
        if not path.exists():
            raise click.ClickException(f"image {image_id!r}: missing file {path}")
        paths[key] = path
    try:
        last = load_tensor(paths["last"])
        mid = load_tensor(paths["middle"])
        saliency = load_plane(paths["saliency"])
        return extract_feature_set(
            image_id,
            last,
            mid,
            saliency,
            config.mask_config(),
            config.pooling_weights(),
            config.pooling_assignment,
        )
    except ValueError as exc:
        raise click.ClickException(f"image {image_id!r}: {exc}")


@main.command("build-index")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="JSON list of {id, last, middle, saliency} entries.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Output index file.")
@click.option("--jobs", type=int, default=1, show_default=True, envvar="VMNET_JOBS",
              help="Parallel extraction workers; output is identical for any value.")
@_config_options()
def cmd_build_index(manifest_path: Path, out_path: Path, jobs: int, **kwargs) -> None:
    """Extract descriptors for every manifest image and write the index."""
    config = _build_config(**kwargs)
    items = _read_manifest(manifest_path)
    root = manifest_path.parent
    if jobs < 1:
        raise click.ClickException(f"--jobs must be >= 1, got {jobs}")
    if jobs == 1:
        feature_sets = [_extract_one(item, root, config) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            feature_sets = list(
                pool.map(lambda item: _extract_one(item, root, config), items)
            )
    try:
        ix = build_index(feature_sets, config)
        save_index(ix, out_path)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"indexed {len(ix)} images -> {out_path}")


@main.command("query")
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--last", "last_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Query last-layer FMAP.")
@click.option("--middle", "middle_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Query middle-layer FMAP.")
@click.option("--saliency", "saliency_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Query raw saliency FMAP (single channel).")
@_config_options(include_k=True)
def cmd_query(index_path: Path, last_path: Path, middle_path: Path,
              saliency_path: Path, **kwargs) -> None:
    """Rank the index against one query and print rank/id/score lines."""
    config = _build_config(**kwargs)
    try:
        ix = load_index(index_path)
        last = load_tensor(last_path)
        mid = load_tensor(middle_path)
        saliency = load_plane(saliency_path)
        q = extract_feature_set(
            "query",
            last,
            mid,
            saliency,
            config.mask_config(),
            config.pooling_weights(),
            config.pooling_assignment,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if q.vamac.dim != ix.last_dim or q.middle.dim != ix.middle_dim:
        raise click.ClickException(
            f"query dims ({q.vamac.dim}, {q.middle.dim}) do not match index "
            f"dims ({ix.last_dim}, {ix.middle_dim})"
        )
    hits = rank_topk(q, ix, config.k, config.fusion_weights())
    click.echo(format_hits(hits))


@main.command("evaluate")
@click.option("--run", "run_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="TSV of query<TAB>rank<TAB>image lines.")
@click.option("--qrels", "qrels_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="TSV of query<TAB>relevant-image lines.")
@click.option("--clamp-ap", is_flag=True, default=False,
              envvar="VMNET_CLAMP_AP",
              help="Divide AP by min(R, n) instead of R.")
def cmd_evaluate(run_path: Path, qrels_path: Path, clamp_ap: bool) -> None:
    """Score a result run against ground truth and print MAP@7."""
    try:
        run = parse_run(run_path)
        qrels = parse_qrels(qrels_path)
        report = format_report(run, qrels, clamp_ap)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(report)


@main.command("mask-dump")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Feature tensor FMAP to derive the mask from.")
@click.option("--p", type=float, default=1.0, show_default=True, envvar="VMNET_P",
              help="Variable-mask exponent.")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path),
              help="Output single-channel FMAP of 0/1 values.")
def cmd_mask_dump(input_path: Path, p: float, out_path: Path) -> None:
    """Write the variable mask of a tensor for external visualization."""
    try:
        t = load_tensor(input_path)
        mask = variable_mask(t, p)
        save_tensor(
            FeatureTensor(mask.bits.astype(np.float32)[None, :, :]), out_path
        )
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"mask ({mask.count()}/{mask.height * mask.width} cells on) -> {out_path}")


if __name__ == "__main__":
    main()
