"""Tensor types and image primitives."""

from .data_models import FeatureMap, Detection, SaliencyMap, FixationMap, as_array
from .operations import (
    bilinear_resize,
    box_to_grid,
    slice_features,
    gaussian_blur,
    gaussian_blur_matrix,
    softmax_2d,
    normalize_to_distribution,
)

__all__ = [
    'FeatureMap',
    'Detection',
    'SaliencyMap',
    'FixationMap',
    'as_array',
    'bilinear_resize',
    'box_to_grid',
    'slice_features',
    'gaussian_blur',
    'gaussian_blur_matrix',
    'softmax_2d',
    'normalize_to_distribution',
]
