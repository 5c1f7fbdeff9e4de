"""Data models for scenes, corpora and experiment results."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..tensor_core import FeatureMap, Detection, SaliencyMap, FixationMap
from ..metrics import MetricReport
from ..readout import TrainingResult
from ..error_handling.exceptions import ValidationError, ShapeMismatchError

DETECTION_MODES = ("ground_truth", "predicted", "random", "none")
TRAIN_MODES = ("ground_truth", "predicted", "none")


@dataclass(frozen=True, eq=False)
class Scene:
    """One sample: global features, detections and ground truth on the feature grid.

    Detections are in image pixels (image_width x image_height); maps live on
    the features' height x width grid. ``detections`` are the detector's
    output, confidences included; ``gt_detections`` are annotated boxes.
    """
    scene_id: str
    features: FeatureMap
    detections: List[Detection]
    saliency: SaliencyMap
    fixations: FixationMap
    image_width: int
    image_height: int
    gt_detections: List[Detection] = field(default_factory=list)
    object_features: Optional[FeatureMap] = None
    detector_width: Optional[int] = None
    detector_height: Optional[int] = None

    def __post_init__(self):
        spatial = (self.features.height, self.features.width)
        for name, shape in (("saliency", self.saliency.shape), ("fixations", self.fixations.shape)):
            if tuple(shape) != spatial:
                raise ShapeMismatchError(
                    f"Scene {self.scene_id}: {name} {tuple(shape)} does not match features {spatial}",
                    field_name=self.scene_id, expected=spatial, actual=shape)
        if self.image_width < 1 or self.image_height < 1:
            raise ValidationError(f"Scene {self.scene_id}: image dimensions must be >= 1",
                                  field_name=self.scene_id, validation_rule="min_1")
        for index, det in enumerate(list(self.detections) + list(self.gt_detections)):
            det.validate_within(self.image_width, self.image_height, index=index)
        object.__setattr__(self, "detections", list(self.detections))
        object.__setattr__(self, "gt_detections", list(self.gt_detections))


@dataclass(frozen=True)
class DetectionSource:
    """Where a scene's detections come from during an experiment."""
    mode: str = "predicted"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in DETECTION_MODES:
            raise ValidationError(f"Unknown detection source {self.mode!r}",
                                  field_name="detection_source", field_value=self.mode,
                                  validation_rule="|".join(DETECTION_MODES))


@dataclass
class SynthSpec:
    """Shape of the synthetic corpus."""
    grid_height: int = 24
    grid_width: int = 32
    image_width: int = 64
    image_height: int = 48
    categories: int = 4
    channels_per_category: int = 2
    min_objects: int = 0
    max_objects: int = 6
    min_box_cells: int = 3
    max_box_cells: int = 9
    fixations_per_scene: int = 16
    gt_blur_sigma: float = 1.0
    center_fraction: float = 0.15
    center_sigma_fraction: float = 0.25
    noise_std: float = 0.02
    false_negative_rate: float = 0.1
    false_positive_rate: float = 0.5
    max_false_positives: int = 2
    low_confidence_rate: float = 0.15
    jitter: float = 1.0

    @property
    def channels(self) -> int:
        return self.categories * self.channels_per_category

    @property
    def cell_width(self) -> float:
        return self.image_width / self.grid_width

    @property
    def cell_height(self) -> float:
        return self.image_height / self.grid_height


@dataclass
class ExperimentConfig:
    """Corpus split and execution settings shared by the experiment runners."""
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    split_seed: int = 0
    detection_source: str = "predicted"
    max_workers: int = 1


@dataclass
class CorpusSplit:
    """Scene indices of the train, validation and test parts."""
    train: List[int]
    val: List[int]
    test: List[int]


@dataclass
class CellResult:
    """One trained-and-evaluated configuration."""
    label: str
    report: Optional[MetricReport] = None
    training: Optional[TrainingResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.report is not None


@dataclass
class ExperimentTable:
    """Ordered cells of an ablation or robustness run."""
    name: str
    cells: List[CellResult] = field(default_factory=list)

    def cell(self, label: str) -> CellResult:
        for cell in self.cells:
            if cell.label == label:
                return cell
        raise KeyError(label)

    @property
    def labels(self) -> List[str]:
        return [cell.label for cell in self.cells]
