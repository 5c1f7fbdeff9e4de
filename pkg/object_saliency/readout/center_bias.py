"""Fitting the Gaussian center-bias prior and the dataset-mean saliency map."""

import logging
from typing import Sequence, Union

import numpy as np

from .data_models import CenterBias
from ..tensor_core import FixationMap, SaliencyMap, normalize_to_distribution, as_array
from ..error_handling.exceptions import DegenerateMapError, ValidationError, ShapeMismatchError

logger = logging.getLogger(__name__)

MIN_SIGMA = 1.0


def fit_center_bias(fixation_maps: Sequence[FixationMap], weight: float = 1.0) -> CenterBias:
    """Gaussian prior from the pooled fixations: centroid and per-axis population std.

    Sigmas are floored at one pixel.
    """
    coordinates = [fmap.coordinates for fmap in fixation_maps if fmap.count > 0]
    if not coordinates:
        raise DegenerateMapError("No fixations to fit a center bias from", map_name="fixations")

    points = np.concatenate(coordinates, axis=0).astype(np.float64)
    rows, cols = points[:, 0], points[:, 1]
    prior = CenterBias(mu_x=float(cols.mean()), mu_y=float(rows.mean()),
                       sigma_x=max(float(cols.std()), MIN_SIGMA),
                       sigma_y=max(float(rows.std()), MIN_SIGMA), weight=weight)
    logger.info(f"Fitted center bias from {len(points)} fixation(s): {prior}")
    return prior


def average_ground_truth(maps: Sequence[Union[SaliencyMap, np.ndarray]]) -> SaliencyMap:
    """Mean of the ground-truth distributions, renormalized."""
    if not maps:
        raise ValidationError("No maps to average", field_name="maps", validation_rule="nonempty")
    first = as_array(maps[0]).shape
    total = np.zeros(first)
    for index, item in enumerate(maps):
        data = as_array(item)
        if data.shape != first:
            raise ShapeMismatchError(f"Map {index} has shape {data.shape}, expected {first}",
                                     field_name="maps", expected=first, actual=data.shape)
        total += data
    return normalize_to_distribution(total / len(maps))
