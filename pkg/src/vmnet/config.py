"""Engine configuration with the tuned default parameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .descriptors import POOLING_ASSIGNMENTS, PoolingWeights
from .masks import MaskConfig
from .retrieval import FusionWeights


@dataclass(frozen=True)
class EngineConfig:
    """Every tunable of the pipeline, bundled for the CLI and manifests.

    The defaults are the tuned operating point: mask exponent 1.0, scale
    weights (0.5, 0.5, 1.0), generalized-mean exponent 3.0 and similarity
    fusion weights (1.0, 1.7, 1.0), with seven results per query.
    """

    p: float = 1.0
    q1: float = 0.5
    q2: float = 0.5
    q3: float = 1.0
    p_pool: float = 3.0
    p_s1: float = 1.0
    p_s2: float = 1.7
    p_s3: float = 1.0
    saliency_threshold: float = 0.5
    k: int = 7
    pooling_assignment: str = "prose"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.pooling_assignment not in POOLING_ASSIGNMENTS:
            raise ValueError(
                f"pooling assignment must be one of {POOLING_ASSIGNMENTS}, "
                f"got {self.pooling_assignment!r}"
            )
        # Delegate range checks to the component configs.
        self.mask_config()
        self.pooling_weights()
        self.fusion_weights()

    def mask_config(self) -> MaskConfig:
        return MaskConfig(p=self.p, saliency_threshold=self.saliency_threshold)

    def pooling_weights(self) -> PoolingWeights:
        return PoolingWeights(q1=self.q1, q2=self.q2, q3=self.q3, p_pool=self.p_pool)

    def fusion_weights(self) -> FusionWeights:
        return FusionWeights(p_s1=self.p_s1, p_s2=self.p_s2, p_s3=self.p_s3)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, mapping: dict) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in mapping.items() if k in known})
