"""Rasterizing per-object values into channel maps and fusing them with global features."""

import logging
from typing import List, Optional, Sequence

import numpy as np

from .data_models import ChannelMap, ObjectSet, AblationFlags, APPEARANCE, SIZE
from ..tensor_core import FeatureMap, Detection, bilinear_resize, box_to_grid
from ..error_handling.exceptions import ValidationError, ShapeMismatchError
from ..error_handling.validators import InputValidator

logger = logging.getLogger(__name__)


def _rasterize(detections: Sequence[Detection], values: Sequence[np.ndarray],
               out_h: int, out_w: int, img_w: float, img_h: float, channels: int) -> np.ndarray:
    """Average per-box values over each covered cell; uncovered cells stay 0.

    ``values[i]`` is either a (channels,) vector broadcast over the box or an
    (h, w, channels) patch already sized to the box footprint.
    """
    total = np.zeros((out_h, out_w, channels))
    count = np.zeros((out_h, out_w, 1))
    for index, (det, value) in enumerate(zip(detections, values)):
        r0, r1, c0, c1 = box_to_grid(det, out_h, out_w, img_w, img_h, index=index)
        total[r0:r1, c0:c1, :] += value
        count[r0:r1, c0:c1, :] += 1.0
    return np.divide(total, count, out=np.zeros_like(total), where=count > 0)


def rasterize_scores(detections: Sequence[Detection], scores: Sequence[float],
                     out_h: int, out_w: int, img_w: float, img_h: float,
                     kind: str = APPEARANCE) -> ChannelMap:
    """Replicate each object's score inside its box, averaging where boxes overlap."""
    if len(detections) != len(scores):
        raise ValidationError(f"{len(detections)} detections but {len(scores)} scores",
                              field_name="scores", validation_rule="same_length")
    InputValidator.validate_count("out_h", out_h)
    InputValidator.validate_count("out_w", out_w)
    values = [np.array([float(s)]) for s in scores]
    grid = _rasterize(detections, values, out_h, out_w, img_w, img_h, channels=1)
    return ChannelMap(grid[:, :, 0], kind)


def normalized_size(box: Detection, img_w: float, img_h: float) -> float:
    """Box area as a fraction of the image area."""
    box.validate_within(img_w, img_h)
    return (box.width * box.height) / (img_w * img_h)


def size_channel(detections: Sequence[Detection], out_h: int, out_w: int,
                 img_w: float, img_h: float) -> ChannelMap:
    """Size-dissimilarity channel: each box filled with its normalized size."""
    sizes = [normalized_size(det, img_w, img_h) for det in detections]
    return rasterize_scores(detections, sizes, out_h, out_w, img_w, img_h, kind=SIZE)


def object_block(object_set: ObjectSet, out_h: int, out_w: int,
                 img_w: float, img_h: float, channels: Optional[int] = None) -> FeatureMap:
    """Paint raw object features back at their boxes; zero elsewhere.

    Each slice is resized to its box footprint on the output grid and
    overlapping boxes are averaged channel by channel. ``channels`` sets the
    depth of an empty block.
    """
    slices = list(object_set.raw_slices) or object_set.features
    if not slices:
        if channels is None:
            raise ValidationError("Empty object set needs an explicit channel count",
                                  field_name="channels", validation_rule="required")
        return FeatureMap(np.zeros((out_h, out_w, channels)))

    depth = slices[0].channels
    patches: List[np.ndarray] = []
    for index, (det, fmap) in enumerate(zip(object_set.detections, slices)):
        r0, r1, c0, c1 = box_to_grid(det, out_h, out_w, img_w, img_h, index=index)
        patches.append(bilinear_resize(fmap, r1 - r0, c1 - c0).data)
    grid = _rasterize(object_set.detections, patches, out_h, out_w, img_w, img_h, channels=depth)
    return FeatureMap(grid)


def build_fused_features(global_map: FeatureMap, appearance: ChannelMap, size: ChannelMap,
                         flags: AblationFlags, objects: Optional[FeatureMap] = None) -> FeatureMap:
    """Concatenate the global features with the selected blocks, in the order O, S, A."""
    spatial = (global_map.height, global_map.width)
    InputValidator.validate_same_shape("appearance channel", spatial, appearance.shape)
    InputValidator.validate_same_shape("size channel", spatial, size.shape)

    blocks = [global_map.data]
    if flags.objects:
        if objects is None:
            raise ValidationError("Object flag set but no object block supplied",
                                  field_name="objects", validation_rule="required")
        if (objects.height, objects.width) != spatial:
            raise ShapeMismatchError(f"object block {objects.shape[:2]} does not match {spatial}",
                                     field_name="objects", expected=spatial,
                                     actual=objects.shape[:2])
        blocks.append(objects.data)
    if flags.size:
        blocks.append(size.data[:, :, None])
    if flags.appearance:
        blocks.append(appearance.data[:, :, None])

    if len(blocks) == 1:
        return global_map
    return FeatureMap(np.concatenate(blocks, axis=-1))
