"""Pairwise object similarity and normalized dissimilarity scores."""

import logging
from typing import Callable, List, Optional, Union

import numpy as np

from .data_models import ObjectSet
from ..tensor_core import FeatureMap
from ..error_handling.exceptions import ValidationError
from ..error_handling.validators import InputValidator

logger = logging.getLogger(__name__)

Similarity = Callable[[FeatureMap, FeatureMap], float]


def _features(value: Union[FeatureMap, np.ndarray]) -> np.ndarray:
    return value.data if isinstance(value, FeatureMap) else FeatureMap(value).data


def pairwise_similarity(f_i: Union[FeatureMap, np.ndarray], f_j: Union[FeatureMap, np.ndarray],
                        eps: float = 1e-8) -> float:
    """Sum over channels of the cosine between the two objects' channel planes.

    Each term lies in [-1, 1]; a zero channel contributes 0 because the norm
    product is clamped to ``eps``.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be > 0: {eps}", field_name="eps", field_value=eps,
                              validation_rule="positive")
    a = _features(f_i)
    b = _features(f_j)
    InputValidator.validate_same_shape("object features", a.shape, b.shape)

    dots = np.einsum("hwc,hwc->c", a, b)
    norms = np.sqrt(np.einsum("hwc,hwc->c", a, a)) * np.sqrt(np.einsum("hwc,hwc->c", b, b))
    return float(np.sum(dots / np.maximum(norms, eps)))


def similarity_matrix(object_set: ObjectSet, eps: float = 1e-8,
                      similarity: Optional[Similarity] = None) -> np.ndarray:
    """n x n matrix of pairwise similarities; the diagonal is left at zero."""
    features = object_set.features
    n = len(features)
    sims = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if similarity is None:
                value = pairwise_similarity(features[i], features[j], eps)
            else:
                value = float(similarity(features[i], features[j]))
            sims[i, j] = sims[j, i] = value
    return sims


def min_max_normalize(raw: np.ndarray, tie_tolerance: float = 1e-9) -> np.ndarray:
    """Rescale positive scores to [0, 1]; near-equal scores all become 1."""
    lo = float(raw.min())
    hi = float(raw.max())
    if hi - lo <= tie_tolerance * abs(hi):
        return np.ones_like(raw)
    return (raw - lo) / (hi - lo)


def dissimilarity_scores(object_set: ObjectSet, eps: float = 1e-8,
                         similarity: Optional[Similarity] = None,
                         tie_tolerance: float = 1e-9) -> List[float]:
    """Appearance dissimilarity of every object against the rest of the set.

    The raw score is the reciprocal of the summed similarities, with the sum
    clamped below at ``eps`` (a negative sum saturates at 1/eps). Raw scores
    are min-max normalized per set.
    """
    if not eps > 0:
        raise ValidationError(f"eps must be > 0: {eps}", field_name="eps", field_value=eps,
                              validation_rule="positive")
    n = len(object_set)
    if n == 0:
        return []
    if n == 1:
        return [1.0]

    sims = similarity_matrix(object_set, eps, similarity)
    raw = np.empty(n)
    for i in range(n):
        total = 0.0
        for j in range(n):
            if j != i:
                total += sims[i, j]
        raw[i] = 1.0 / max(total, eps)

    scores = min_max_normalize(raw, tie_tolerance)
    logger.debug(f"Dissimilarity over {n} objects: raw={raw.tolist()} normalized={scores.tolist()}")
    return [float(s) for s in scores]
