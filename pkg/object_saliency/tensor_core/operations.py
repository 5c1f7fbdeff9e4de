"""Image-processing primitives: resize, box slicing, blur and softmax."""

import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from .data_models import FeatureMap, SaliencyMap, Detection, as_array
from ..error_handling.exceptions import ValidationError, DetectionError
from ..error_handling.validators import InputValidator

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, FeatureMap, SaliencyMap]


def _interp_axis(n_in: int, n_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Corner-aligned sample positions: destination i maps to i*(n_in-1)/(n_out-1)."""
    if n_out == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.minimum(np.floor(pos).astype(np.intp), max(n_in - 2, 0))
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def bilinear_resize(src: Union[FeatureMap, np.ndarray], out_h: int, out_w: int) -> FeatureMap:
    """Resize every channel with corner-aligned bilinear interpolation."""
    out_h = InputValidator.validate_count("out_h", out_h)
    out_w = InputValidator.validate_count("out_w", out_w)
    data = src.data if isinstance(src, FeatureMap) else FeatureMap(src).data
    in_h, in_w, _ = data.shape

    if (in_h, in_w) == (out_h, out_w):
        return FeatureMap(data)

    r0, r1, fr = _interp_axis(in_h, out_h)
    rows = data[r0] * (1.0 - fr)[:, None, None] + data[r1] * fr[:, None, None]
    c0, c1, fc = _interp_axis(in_w, out_w)
    out = rows[:, c0] * (1.0 - fc)[None, :, None] + rows[:, c1] * fc[None, :, None]
    return FeatureMap(out)


def box_to_grid(box: Detection, grid_h: int, grid_w: int,
                frame_w: float, frame_h: float, index: int = None) -> Tuple[int, int, int, int]:
    """Map a box in a frame_w x frame_h frame onto grid cells.

    Returns (row_start, row_stop, col_start, col_stop). Min edges are
    floored, max edges ceiled, both clamped to the grid, and the extent is
    at least one cell per axis.
    """
    if frame_w <= 0 or frame_h <= 0:
        raise ValidationError(f"Frame dimensions must be positive: {frame_w}x{frame_h}",
                              field_name="frame", validation_rule="positive")

    c0 = math.floor(box.x_min * grid_w / frame_w)
    c1 = math.ceil(box.x_max * grid_w / frame_w)
    r0 = math.floor(box.y_min * grid_h / frame_h)
    r1 = math.ceil(box.y_max * grid_h / frame_h)

    c0, c1 = max(c0, 0), min(c1, grid_w)
    r0, r1 = max(r0, 0), min(r1, grid_h)
    if c0 >= grid_w or r0 >= grid_h or c1 <= 0 or r1 <= 0:
        raise DetectionError(f"Detection {box} falls outside the {grid_h}x{grid_w} grid",
                             detection=box, index=index)

    c1 = max(c1, c0 + 1)
    r1 = max(r1, r0 + 1)
    return r0, r1, c0, c1


def slice_features(global_map: FeatureMap, box: Detection,
                   detector_w: int, detector_h: int, index: int = None) -> FeatureMap:
    """Cut the region under ``box`` (detector coordinates) out of ``global_map``."""
    InputValidator.validate_count("detector_w", detector_w)
    InputValidator.validate_count("detector_h", detector_h)
    r0, r1, c0, c1 = box_to_grid(box, global_map.height, global_map.width,
                                 detector_w, detector_h, index=index)
    return FeatureMap(global_map.data[r0:r1, c0:c1, :])


@lru_cache(maxsize=64)
def gaussian_blur_matrix(n: int, sigma: float) -> np.ndarray:
    """n x n blur operator for one axis.

    Taps falling outside [0, n) add their weight to the centre tap, which
    keeps the matrix symmetric with unit row and column sums.
    """
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1)
    weights = np.exp(-0.5 * (offsets / sigma) ** 2)
    weights /= weights.sum()

    rows = np.arange(n)[:, None]
    cols = rows + offsets[None, :]
    inside = (cols >= 0) & (cols < n)
    tap = np.broadcast_to(weights, cols.shape)

    matrix = np.zeros((n, n))
    np.add.at(matrix, (np.broadcast_to(rows, cols.shape)[inside], cols[inside]), tap[inside])
    matrix[np.arange(n), np.arange(n)] += np.where(inside, 0.0, tap).sum(axis=1)
    matrix.setflags(write=False)
    return matrix


def gaussian_blur(values: ArrayLike, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a rank-2 map; mass-conserving at the borders."""
    data = as_array(values)
    if data.ndim != 2:
        raise ValidationError(f"gaussian_blur expects a rank-2 map, got shape {data.shape}",
                              field_name="map", validation_rule="rank_2")
    if not np.isfinite(sigma) or sigma < 0:
        raise ValidationError(f"Blur sigma must be >= 0: {sigma}",
                              field_name="sigma", field_value=sigma, validation_rule="min_0")
    if sigma == 0:
        return np.array(data, dtype=np.float64, copy=True)

    h, w = data.shape
    return gaussian_blur_matrix(h, float(sigma)) @ data @ gaussian_blur_matrix(w, float(sigma))


def softmax_2d(logits: ArrayLike) -> SaliencyMap:
    """Normalized exponential over every pixel of a rank-2 logit map."""
    data = as_array(logits)
    InputValidator.validate_finite("logits", data)
    shifted = np.exp(data - data.max())
    return SaliencyMap(shifted / shifted.sum())


def normalize_to_distribution(values: ArrayLike) -> SaliencyMap:
    """Divide a nonnegative map by its total."""
    data = as_array(values)
    InputValidator.validate_finite("map", data)
    InputValidator.validate_nonnegative("map", data)
    total = float(data.sum())
    if total <= 0.0:
        raise ValidationError("Cannot normalize an all-zero map",
                              field_name="map", validation_rule="positive_sum")
    return SaliencyMap(data / total)
