"""Masked multi-descriptor image retrieval over pre-extracted feature maps.

The engine consumes convolutional feature tensors and raw saliency maps
from disk (FMAP files), aggregates them into three complementary
descriptors per image, persists the database as a single index file, and
ranks it against queries by fused cosine similarity.  No deep-learning
framework is required at query time.
"""

from .config import EngineConfig
from .descriptors import (
    FeatureSet,
    PoolingWeights,
    Region,
    extract_feature_set,
    grmaac,
    lp_pool,
    mac,
    middle_descriptor,
    pool_region,
    rmac_regions,
    vamac,
)
from .errors import BuildError, FormatError, IntegrityError
from .evaluation import (
    ap_at_n,
    format_report,
    map_at_7,
    parse_qrels,
    parse_run,
    per_query_ap,
)
from .index import Index, build_index, load_index, save_index
from .masks import (
    BinaryMask,
    MaskConfig,
    apply_mask,
    binarize_saliency,
    channel_sum,
    combine,
    variable_mask,
)
from .retrieval import FusionWeights, Hit, format_hits, rank_topk, similarity
from .tensor import (
    Descriptor,
    FeatureTensor,
    Plane,
    bilinear_resize,
    l2_normalize,
    load_plane,
    load_tensor,
    save_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "BuildError",
    "Descriptor",
    "EngineConfig",
    "FeatureSet",
    "FeatureTensor",
    "FormatError",
    "FusionWeights",
    "Hit",
    "Index",
    "IntegrityError",
    "MaskConfig",
    "Plane",
    "PoolingWeights",
    "Region",
    "ap_at_n",
    "apply_mask",
    "bilinear_resize",
    "binarize_saliency",
    "build_index",
    "channel_sum",
    "combine",
    "extract_feature_set",
    "format_hits",
    "format_report",
    "grmaac",
    "l2_normalize",
    "load_index",
    "load_plane",
    "load_tensor",
    "lp_pool",
    "mac",
    "map_at_7",
    "middle_descriptor",
    "parse_qrels",
    "parse_run",
    "per_query_ap",
    "pool_region",
    "rank_topk",
    "rmac_regions",
    "save_index",
    "save_tensor",
    "similarity",
    "vamac",
    "variable_mask",
]
