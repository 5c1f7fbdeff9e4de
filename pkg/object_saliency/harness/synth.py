"""Seeded synthetic scenes whose ground truth follows the object-dissimilarity rules.

Objects of the same category share a feature direction and a spatial
texture. Ground-truth mass per object grows with its appearance
dissimilarity and its size, so unique objects outweigh repeated ones and
larger objects outweigh smaller ones. A center-bias Gaussian carries the
remaining mass (all of it when a scene has no objects).
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .data_models import Scene, SynthSpec
from ..tensor_core import FeatureMap, Detection, FixationMap, gaussian_blur, normalize_to_distribution
from ..dissimilarity import ObjectSet, dissimilarity_scores, normalized_size
from ..performance.monitor import monitor_performance
from ..error_handling.validators import InputValidator

logger = logging.getLogger(__name__)

GridBox = Tuple[int, int, int, int]  # row_start, row_stop, col_start, col_stop
PLACEMENT_TRIES = 100


def category_signature(category: int, channels_per_category: int) -> np.ndarray:
    """Fixed unit direction inside the category's own channel block."""
    direction = np.random.default_rng(1000 + category).uniform(0.3, 1.0, channels_per_category)
    return direction / np.linalg.norm(direction)


def category_texture(category: int, categories: int, rows: int, cols: int) -> np.ndarray:
    """Linear ramp whose orientation depends on the category."""
    theta = math.pi * category / categories
    u = (np.arange(cols) + 0.5) / cols
    v = (np.arange(rows) + 0.5) / rows
    return 1.0 + 0.4 * ((2 * u - 1)[None, :] * math.cos(theta) + (2 * v - 1)[:, None] * math.sin(theta))


def planted_masses(appearance: Sequence[float], sizes: Sequence[float]) -> List[float]:
    """Ground-truth mass per object: (0.25 + appearance) * (0.5 + 8 * size)."""
    return [(0.25 + a) * (0.5 + 8.0 * s) for a, s in zip(appearance, sizes)]


def center_prior(spec: SynthSpec) -> np.ndarray:
    rows = (np.arange(spec.grid_height) - (spec.grid_height - 1) / 2) / (spec.center_sigma_fraction * spec.grid_height)
    cols = (np.arange(spec.grid_width) - (spec.grid_width - 1) / 2) / (spec.center_sigma_fraction * spec.grid_width)
    density = np.exp(-0.5 * (rows[:, None] ** 2 + cols[None, :] ** 2))
    return density / density.sum()


def ground_truth_map(boxes: Sequence[GridBox], masses: Sequence[float], spec: SynthSpec) -> np.ndarray:
    """Object masses spread over their boxes, blurred, mixed with the center prior."""
    center = center_prior(spec)
    if not boxes:
        return center
    objects = np.zeros((spec.grid_height, spec.grid_width))
    for (r0, r1, c0, c1), mass in zip(boxes, masses):
        objects[r0:r1, c0:c1] += mass / ((r1 - r0) * (c1 - c0))
    objects = gaussian_blur(objects, spec.gt_blur_sigma)
    objects /= objects.sum()
    return (1.0 - spec.center_fraction) * objects + spec.center_fraction * center


def _overlaps(box: GridBox, placed: Sequence[GridBox], margin: int = 1) -> bool:
    r0, r1, c0, c1 = box
    for p0, p1, q0, q1 in placed:
        if r0 < p1 + margin and p0 < r1 + margin and c0 < q1 + margin and q0 < c1 + margin:
            return True
    return False


def _place_objects(rng: np.random.Generator, spec: SynthSpec, count: int,
                   avoid: Sequence[GridBox] = ()) -> List[GridBox]:
    placed: List[GridBox] = []
    for _ in range(count):
        for _ in range(PLACEMENT_TRIES):
            h = int(rng.integers(spec.min_box_cells, min(spec.max_box_cells, spec.grid_height) + 1))
            w = int(rng.integers(spec.min_box_cells, min(spec.max_box_cells, spec.grid_width) + 1))
            r0 = int(rng.integers(0, spec.grid_height - h + 1))
            c0 = int(rng.integers(0, spec.grid_width - w + 1))
            box = (r0, r0 + h, c0, c0 + w)
            if not _overlaps(box, list(avoid) + placed):
                placed.append(box)
                break
    return placed


def _ensure_unique(categories: List[int], spec: SynthSpec) -> List[int]:
    """When a category repeats, make sure at least one object is alone in its category."""
    if len(categories) < 2:
        return categories
    counts = {c: categories.count(c) for c in categories}
    if len(counts) == len(categories) or 1 in counts.values():
        return categories
    unused = [c for c in range(spec.categories) if c not in counts]
    if unused:
        categories[-1] = unused[0]
    return categories


def _to_detection(box: GridBox, spec: SynthSpec, category: int, confidence: float = 1.0) -> Detection:
    r0, r1, c0, c1 = box
    return Detection(c0 * spec.cell_width, r0 * spec.cell_height, c1 * spec.cell_width,
                     r1 * spec.cell_height, confidence, category)


def _predicted_detections(rng: np.random.Generator, spec: SynthSpec, truth: Sequence[Detection],
                          boxes: Sequence[GridBox]) -> List[Detection]:
    """Detector output: jittered boxes, misses, background false alarms and some low confidences."""
    predicted = []
    for det in truth:
        if rng.random() < spec.false_negative_rate:
            continue
        shift = rng.normal(0.0, spec.jitter, 4)
        x0 = min(max(det.x_min + shift[0], 0.0), spec.image_width)
        y0 = min(max(det.y_min + shift[1], 0.0), spec.image_height)
        x1 = min(max(det.x_max + shift[2], 0.0), spec.image_width)
        y1 = min(max(det.y_max + shift[3], 0.0), spec.image_height)
        if not (x0 < x1 and y0 < y1):
            x0, y0, x1, y1 = det.x_min, det.y_min, det.x_max, det.y_max
        if rng.random() < spec.low_confidence_rate:
            confidence = float(rng.uniform(0.3, 0.7))
        else:
            confidence = float(rng.uniform(0.75, 1.0))
        predicted.append(Detection(float(x0), float(y0), float(x1), float(y1), confidence, det.class_id))

    for _ in range(spec.max_false_positives):
        if rng.random() >= spec.false_positive_rate:
            continue
        box = _place_objects(rng, spec, 1, avoid=boxes)
        if box:
            boxes = list(boxes) + box
            predicted.append(_to_detection(box[0], spec, int(rng.integers(spec.categories)),
                                           float(rng.uniform(0.6, 0.95))))
    return predicted


def synth_scene(rng: np.random.Generator, spec: SynthSpec, scene_id: str,
                n_objects: Optional[int] = None) -> Scene:
    """One synthetic scene drawn from ``rng``."""
    if n_objects is None:
        n_objects = int(rng.integers(spec.min_objects, spec.max_objects + 1))
    boxes = _place_objects(rng, spec, n_objects)
    categories = _ensure_unique([int(rng.integers(spec.categories)) for _ in boxes], spec)

    cpc = spec.channels_per_category
    data = np.zeros((spec.grid_height, spec.grid_width, spec.channels))
    for (r0, r1, c0, c1), category in zip(boxes, categories):
        amplitude = rng.uniform(0.6, 1.4)
        texture = category_texture(category, spec.categories, r1 - r0, c1 - c0)
        signature = category_signature(category, cpc)
        data[r0:r1, c0:c1, category * cpc:(category + 1) * cpc] += amplitude * texture[:, :, None] * signature
    data += rng.normal(0.0, spec.noise_std, data.shape)
    features = FeatureMap(data)

    truth = [_to_detection(box, spec, category) for box, category in zip(boxes, categories)]
    objects = ObjectSet.from_detections(features, truth, spec.image_width, spec.image_height)
    appearance = dissimilarity_scores(objects)
    sizes = [normalized_size(det, spec.image_width, spec.image_height) for det in truth]
    saliency = normalize_to_distribution(ground_truth_map(boxes, planted_masses(appearance, sizes), spec))

    draws = rng.choice(saliency.data.size, size=spec.fixations_per_scene, p=saliency.data.ravel())
    rows, cols = np.unravel_index(draws, saliency.shape)
    fixations = FixationMap.from_points(spec.grid_height, spec.grid_width, zip(rows, cols))

    return Scene(scene_id=scene_id, features=features,
                 detections=_predicted_detections(rng, spec, truth, boxes),
                 saliency=saliency, fixations=fixations,
                 image_width=spec.image_width, image_height=spec.image_height,
                 gt_detections=truth)


@monitor_performance("synth_corpus")
def synth_corpus(n: int, seed: int = 0, spec: Optional[SynthSpec] = None) -> List[Scene]:
    """``n`` scenes, each drawn from its own child of SeedSequence(seed)."""
    n = InputValidator.validate_count("n", n)
    spec = spec or SynthSpec()
    children = np.random.SeedSequence(seed).spawn(n)
    scenes = [synth_scene(np.random.default_rng(child), spec, f"scene_{index:04d}")
              for index, child in enumerate(children)]
    logger.info(f"Synthesized {n} scene(s) with seed {seed}")
    return scenes
