"""SVD projection and canonical correlation analysis of object features."""

from .data_models import FeatureMatrix, SVDResult
from .decomposition import svd
from .analysis import (
    retained_rank,
    project_topk,
    cca_correlations,
    svcca_score,
    svcca_similarity,
)

__all__ = [
    'FeatureMatrix',
    'SVDResult',
    'svd',
    'retained_rank',
    'project_topk',
    'cca_correlations',
    'svcca_score',
    'svcca_similarity',
]
