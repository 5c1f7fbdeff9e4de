"""Appearance and size dissimilarity channels computed from detections."""

from .data_models import (
    DissimilarityConfig,
    ChannelMap,
    ObjectSet,
    AblationFlags,
    SceneChannels,
    APPEARANCE,
    SIZE,
    DISTANCES,
)
from .scoring import pairwise_similarity, similarity_matrix, min_max_normalize, dissimilarity_scores
from .channels import (
    rasterize_scores,
    normalized_size,
    size_channel,
    object_block,
    build_fused_features,
)
from .extractor import DissimilarityExtractor

__all__ = [
    'DissimilarityConfig',
    'ChannelMap',
    'ObjectSet',
    'AblationFlags',
    'SceneChannels',
    'APPEARANCE',
    'SIZE',
    'DISTANCES',
    'pairwise_similarity',
    'similarity_matrix',
    'min_max_normalize',
    'dissimilarity_scores',
    'rasterize_scores',
    'normalized_size',
    'size_channel',
    'object_block',
    'build_fused_features',
    'DissimilarityExtractor',
]
