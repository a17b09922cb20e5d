"""Average precision at a cutoff and its mean over cutoffs 1..7.

AP at cutoff n for one query divides the usual precision-weighted hit sum
by the total number of relevant images, not by min(R, n), so a query with
more relevant images than the cutoff cannot reach 1.  That literal form is
the default; the clamped denominator used by some toolkits is available via
``clamp``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence, Set

from .errors import FormatError

TOP_N = 7


def ap_at_n(
    retrieved: Sequence[str],
    relevant: Set[str],
    n: int,
    clamp: bool = False,
) -> float:
    """Average precision of one ranked list at cutoff ``n``.

    Sums precision-at-i over the relevant items in the first n positions and
    divides by the number of relevant images (or min(R, n) when ``clamp``).
    """
    if n < 1:
        raise ValueError(f"cutoff must be >= 1, got {n}")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    total = 0.0
    for i, image_id in enumerate(retrieved[:n], start=1):
        if image_id in relevant:
            hits += 1
            total += hits / i
    denom = min(len(relevant), n) if clamp else len(relevant)
    return total / denom


def map_at_7(
    run: Mapping[str, Sequence[str]],
    qrels: Mapping[str, Set[str]],
    clamp: bool = False,
) -> float:
    """Mean over cutoffs 1..7 of the mean AP over all qrels queries.

    Queries present in qrels but missing from the run contribute AP = 0 at
    every cutoff; a run query unknown to qrels is a validation error.
    """
    if not qrels:
        raise ValueError("qrels must be non-empty")
    for query_id in run:
        if query_id not in qrels:
            raise ValueError(f"run references unknown query: {query_id}")
    per_cutoff = []
    for n in range(1, TOP_N + 1):
        total = 0.0
        for query_id, relevant in qrels.items():
            retrieved = run.get(query_id, ())
            total += ap_at_n(retrieved, relevant, n, clamp)
        per_cutoff.append(total / len(qrels))
    return sum(per_cutoff) / TOP_N


def per_query_ap(
    run: Mapping[str, Sequence[str]],
    qrels: Mapping[str, Set[str]],
    clamp: bool = False,
) -> dict[str, float]:
    """Each query's mean AP over cutoffs 1..7 (its contribution to MAP@7)."""
    for query_id in run:
        if query_id not in qrels:
            raise ValueError(f"run references unknown query: {query_id}")
    out = {}
    for query_id, relevant in qrels.items():
        retrieved = run.get(query_id, ())
        out[query_id] = sum(
            ap_at_n(retrieved, relevant, n, clamp) for n in range(1, TOP_N + 1)
        ) / TOP_N
    return out


def parse_qrels(path: str | Path) -> dict[str, set[str]]:
    """Read ``query_id<TAB>relevant_image_id`` lines into a relevance map."""
    qrels: dict[str, set[str]] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise FormatError(f"{path}:{lineno}: expected 'query<TAB>image', got {line!r}")
        qrels.setdefault(parts[0], set()).add(parts[1])
    if not qrels:
        raise FormatError(f"{path}: no qrels entries")
    return qrels


def parse_run(path: str | Path) -> dict[str, list[str]]:
    """Read ``query_id<TAB>rank<TAB>image_id`` lines into ranked lists.

    Ranks within a query must be unique; lists are returned in rank order.
    Duplicate image ids within one query's list are rejected.
    """
    ranked: dict[str, dict[int, str]] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0] or not parts[2]:
            raise FormatError(
                f"{path}:{lineno}: expected 'query<TAB>rank<TAB>image', got {line!r}"
            )
        try:
            rank = int(parts[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: rank is not an integer: {parts[1]!r}")
        if rank < 1:
            raise FormatError(f"{path}:{lineno}: rank must be >= 1, got {rank}")
        by_rank = ranked.setdefault(parts[0], {})
        if rank in by_rank:
            raise FormatError(f"{path}:{lineno}: duplicate rank {rank} for query {parts[0]}")
        by_rank[rank] = parts[2]
    run: dict[str, list[str]] = {}
    for query_id, by_rank in ranked.items():
        ordered = [by_rank[r] for r in sorted(by_rank)]
        if len(set(ordered)) != len(ordered):
            raise FormatError(f"{path}: duplicate image id in results for query {query_id}")
        run[query_id] = ordered
    return run


def format_report(
    run: Mapping[str, Sequence[str]],
    qrels: Mapping[str, Set[str]],
    clamp: bool = False,
) -> str:
    """Overall score line plus a per-query TSV breakdown."""
    score = map_at_7(run, qrels, clamp)
    by_query = per_query_ap(run, qrels, clamp)
    lines = [f"MAP@7 = {score:.6f}"]
    for query_id in sorted(by_query):
        lines.append(f"{query_id}\t{by_query[query_id]:.6f}")
    return "\n".join(lines)
