"""Corpus directories: one subdirectory per scene plus a manifest."""

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from .data_models import Scene, CorpusSplit, ExperimentConfig
from .formats import (
    save_feature_tensor, load_feature_tensor, save_saliency_map, load_saliency_map,
    save_fixation_map, load_fixation_map, save_detections, load_detections,
    format_key_values, load_key_values, write_text_atomic
)
from ..error_handling.exceptions import FileFormatError, FileSystemError, ValidationError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
FEATURES = "features.ftn"
OBJECT_FEATURES = "object_features.ftn"
DETECTIONS = "detections.txt"
GT_DETECTIONS = "gt_detections.txt"
SALIENCY = "saliency.ftn"
FIXATIONS = "fixations.ftn"
META = "meta.txt"


def save_scene(scene: Scene, directory: Union[str, Path]):
    directory = Path(directory)
    save_feature_tensor(scene.features, directory / FEATURES)
    save_detections(scene.detections, directory / DETECTIONS)
    save_detections(scene.gt_detections, directory / GT_DETECTIONS)
    save_saliency_map(scene.saliency, directory / SALIENCY)
    save_fixation_map(scene.fixations, directory / FIXATIONS)
    meta = {"scene_id": scene.scene_id, "image_width": scene.image_width,
            "image_height": scene.image_height}
    if scene.object_features is not None:
        save_feature_tensor(scene.object_features, directory / OBJECT_FEATURES)
    if scene.detector_width is not None and scene.detector_height is not None:
        meta["detector_width"] = scene.detector_width
        meta["detector_height"] = scene.detector_height
    write_text_atomic(directory / META, format_key_values(meta))


def _int_field(meta: dict, key: str, source: Path) -> int:
    try:
        return int(meta[key])
    except KeyError:
        raise FileFormatError(f"{source}: missing {key}", file_path=str(source))
    except ValueError:
        raise FileFormatError(f"{source}: {key} is not an integer: {meta[key]!r}", file_path=str(source))


def load_scene(directory: Union[str, Path]) -> Scene:
    """Read one scene; detections are kept whatever their confidence."""
    directory = Path(directory)
    meta_path = directory / META
    meta = load_key_values(meta_path)
    object_path = directory / OBJECT_FEATURES
    has_detector = "detector_width" in meta and "detector_height" in meta
    return Scene(
        scene_id=meta.get("scene_id", directory.name),
        features=load_feature_tensor(directory / FEATURES),
        detections=load_detections(directory / DETECTIONS, confidence_threshold=None),
        saliency=load_saliency_map(directory / SALIENCY),
        fixations=load_fixation_map(directory / FIXATIONS),
        image_width=_int_field(meta, "image_width", meta_path),
        image_height=_int_field(meta, "image_height", meta_path),
        gt_detections=(load_detections(directory / GT_DETECTIONS, confidence_threshold=None)
                       if (directory / GT_DETECTIONS).exists() else []),
        object_features=load_feature_tensor(object_path) if object_path.exists() else None,
        detector_width=_int_field(meta, "detector_width", meta_path) if has_detector else None,
        detector_height=_int_field(meta, "detector_height", meta_path) if has_detector else None,
    )


def save_corpus(scenes: Sequence[Scene], directory: Union[str, Path]):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for scene in scenes:
        save_scene(scene, directory / scene.scene_id)
    write_text_atomic(directory / MANIFEST, "".join(f"{scene.scene_id}\n" for scene in scenes))
    logger.info(f"Wrote {len(scenes)} scene(s) to {directory}")


def load_corpus(directory: Union[str, Path]) -> List[Scene]:
    directory = Path(directory)
    manifest = directory / MANIFEST
    if not manifest.exists():
        raise FileSystemError(f"No corpus manifest in {directory}", file_path=str(manifest),
                              operation="read")
    scene_ids = [line.strip() for line in manifest.read_text().splitlines()
                 if line.strip() and not line.startswith("#")]
    scenes = [load_scene(directory / scene_id) for scene_id in scene_ids]
    logger.info(f"Loaded {len(scenes)} scene(s) from {directory}")
    return scenes


def split_corpus(n_scenes: int, config: ExperimentConfig) -> CorpusSplit:
    """Seeded train/validation/test split; each part is sorted."""
    if n_scenes < 1:
        raise ValidationError("Cannot split an empty corpus", field_name="corpus",
                              validation_rule="nonempty")
    order = np.random.default_rng(config.split_seed).permutation(n_scenes)
    n_train = max(1, int(round(n_scenes * config.train_fraction)))
    n_val = int(round(n_scenes * config.val_fraction))
    if n_scenes >= 3:
        n_train = min(n_train, n_scenes - 2)
        n_val = max(0, min(n_val, n_scenes - n_train - 1))
    else:
        n_val = 0
    train = sorted(int(i) for i in order[:n_train])
    val = sorted(int(i) for i in order[n_train:n_train + n_val])
    test = sorted(int(i) for i in order[n_train + n_val:])
    if not test:
        test = train
    return CorpusSplit(train=train, val=val, test=test)
