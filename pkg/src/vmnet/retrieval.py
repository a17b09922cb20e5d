"""Online similarity fusion and deterministic top-k ranking.

Descriptors are unit norm (or zero), so cosine similarity is a plain dot
product.  The final score is a weighted sum of the three per-family
similarities.  Ranking scans the whole index; ties are broken by ascending
image id so the output is a pure function of the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .descriptors import FeatureSet

if TYPE_CHECKING:
    from .index import Index


@dataclass(frozen=True)
class FusionWeights:
    """Weights of the masked-max, regional and middle similarities."""

    p_s1: float = 1.0
    p_s2: float = 1.7
    p_s3: float = 1.0

    def __post_init__(self) -> None:
        for name in ("p_s1", "p_s2", "p_s3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.p_s1 > 0 or self.p_s2 > 0 or self.p_s3 > 0):
            raise ValueError("at least one fusion weight must be positive")


@dataclass(frozen=True)
class Hit:
    """One ranked result; ranks are 1-based."""

    image_id: str
    score: float
    rank: int


def _dot(a, b) -> float:
    return float(np.dot(a.values.astype(np.float64), b.values.astype(np.float64)))


def similarity(q: FeatureSet, d: FeatureSet, w: FusionWeights) -> float:
    """Weighted sum of the three per-family dot products."""
    if q.vamac.dim != d.vamac.dim:
        raise ValueError(
            f"last-layer dims differ: query {q.vamac.dim} vs entry {d.vamac.dim}"
        )
    if q.middle.dim != d.middle.dim:
        raise ValueError(
            f"middle dims differ: query {q.middle.dim} vs entry {d.middle.dim}"
        )
    return (
        w.p_s1 * _dot(q.vamac, d.vamac)
        + w.p_s2 * _dot(q.grmaac, d.grmaac)
        + w.p_s3 * _dot(q.middle, d.middle)
    )


def rank_topk(q: FeatureSet, ix: "Index", k: int, w: FusionWeights) -> list[Hit]:
    """Exhaustively score every index entry and return the top ``k``.

    Ordering is score descending with ties broken by ascending image id
    (byte order); at most min(k, len(index)) hits are returned.  An empty
    index yields an empty list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    entries = ix.entries
    if not entries:
        return []
    scores = [similarity(q, e, w) for e in entries]
    # Entries are stored sorted by id, so a stable sort on descending score
    # leaves ties in ascending id order.
    order = sorted(range(len(entries)), key=lambda i: -scores[i])
    return [
        Hit(image_id=entries[i].image_id, score=scores[i], rank=pos + 1)
        for pos, i in enumerate(order[:k])
    ]


def format_hits(hits: list[Hit]) -> str:
    """Render hits as ``rank<TAB>image_id<TAB>score`` lines, 6 decimals."""
    return "\n".join(f"{h.rank}\t{h.image_id}\t{h.score:.6f}" for h in hits)
