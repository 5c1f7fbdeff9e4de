"""Typed, validated views of the configuration sections."""

import logging
from dataclasses import asdict, fields
from typing import Any, Dict, Optional

from .manager import ConfigManager
from ..dissimilarity import DissimilarityConfig, DISTANCES
from ..readout import ReadoutConfig, TrainConfig, LOSS_KINDS
from ..metrics import EvaluationConfig
from ..harness.data_models import SynthSpec, ExperimentConfig, DETECTION_MODES
from ..error_handling.exceptions import ConfigurationError, ValidationError
from ..error_handling.validators import InputValidator

logger = logging.getLogger(__name__)

NUMBER = (int, float)

# key -> (type, min, max, exclusive_min)
RULES = {
    "dissimilarity.eps": (NUMBER, 0, None, True),
    "dissimilarity.energy_fraction": (NUMBER, 0, 1, True),
    "dissimilarity.tie_tolerance": (NUMBER, 0, None, False),
    "detections.confidence_threshold": (NUMBER, 0, 1, False),
    "readout.smooth_sigma": (NUMBER, 0, None, False),
    "readout.init_seed": (int, 0, None, False),
    "training.learning_rate": (NUMBER, 0, None, False),
    "training.batch_size": (int, 1, None, False),
    "training.epochs": (int, 1, None, False),
    "training.seed": (int, 0, None, False),
    "training.beta1": (NUMBER, 0, 1, False),
    "training.beta2": (NUMBER, 0, 1, False),
    "training.adam_eps": (NUMBER, 0, None, True),
    "training.kld_eps": (NUMBER, 0, None, True),
    "evaluation.kld_eps": (NUMBER, 0, None, True),
    "evaluation.sauc_splits": (int, 1, None, False),
    "evaluation.sauc_seed": (int, 0, None, False),
    "synth.grid_height": (int, 1, None, False),
    "synth.grid_width": (int, 1, None, False),
    "synth.image_width": (int, 1, None, False),
    "synth.image_height": (int, 1, None, False),
    "synth.categories": (int, 1, None, False),
    "synth.channels_per_category": (int, 1, None, False),
    "synth.min_objects": (int, 0, None, False),
    "synth.max_objects": (int, 0, None, False),
    "synth.min_box_cells": (int, 1, None, False),
    "synth.max_box_cells": (int, 1, None, False),
    "synth.fixations_per_scene": (int, 1, None, False),
    "synth.gt_blur_sigma": (NUMBER, 0, None, False),
    "synth.center_fraction": (NUMBER, 0, 1, False),
    "synth.center_sigma_fraction": (NUMBER, 0, None, True),
    "synth.noise_std": (NUMBER, 0, None, False),
    "synth.false_negative_rate": (NUMBER, 0, 1, False),
    "synth.false_positive_rate": (NUMBER, 0, 1, False),
    "synth.max_false_positives": (int, 0, None, False),
    "synth.low_confidence_rate": (NUMBER, 0, 1, False),
    "synth.jitter": (NUMBER, 0, None, False),
    "experiments.train_fraction": (NUMBER, 0, 1, True),
    "experiments.val_fraction": (NUMBER, 0, 1, False),
    "experiments.split_seed": (int, 0, None, False),
    "experiments.max_workers": (int, 1, None, False),
}

CHOICES = {
    "dissimilarity.distance": DISTANCES,
    "training.loss": LOSS_KINDS,
    "experiments.detection_source": DETECTION_MODES,
}


class SettingsManager:
    """Loads each configuration section into its dataclass and validates it."""

    def __init__(self, config_manager: Optional[ConfigManager] = None):
        self.config_manager = config_manager or ConfigManager()
        self.dissimilarity = self._load_config_section("dissimilarity", DissimilarityConfig)
        self.readout = self._load_config_section("readout", ReadoutConfig)
        self.training = self._load_config_section("training", TrainConfig)
        self.evaluation = self._load_config_section("evaluation", EvaluationConfig)
        self.synth = self._load_config_section("synth", SynthSpec)
        self.experiments = self._load_config_section("experiments", ExperimentConfig)
        self.confidence_threshold = self._validated(
            "detections.confidence_threshold",
            self.config_manager.get_setting("detections.confidence_threshold", 0.7))
        self._check_cross_fields()

    def _validated(self, key: str, value: Any) -> Any:
        try:
            if key in RULES:
                expected, low, high, exclusive = RULES[key]
                InputValidator.validate_config_value(key, value, expected, low, high, exclusive)
            if key in CHOICES and value not in CHOICES[key]:
                raise ValidationError(f"Config {key} must be one of {CHOICES[key]}: {value!r}",
                                      field_name=key, field_value=value,
                                      validation_rule="|".join(CHOICES[key]))
        except ValidationError as e:
            raise ConfigurationError(e.message, config_key=key, config_value=value)
        return value

    def _load_config_section(self, section: str, config_class) -> Any:
        """Load a configuration section into a dataclass."""
        config_data = self.config_manager.get_setting(section, {})
        if not isinstance(config_data, dict):
            raise ConfigurationError(f"Config section {section} must be an object",
                                     config_key=section, config_value=config_data)
        known = {f.name for f in fields(config_class)}
        unknown = sorted(set(config_data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown keys in {section}: {', '.join(unknown)}",
                                     config_key=section, config_value=unknown)

        merged = {**asdict(config_class()), **config_data}
        for key, value in merged.items():
            self._validated(f"{section}.{key}", value)
        try:
            return config_class(**merged)
        except (TypeError, ValidationError) as e:
            raise ConfigurationError(f"Invalid configuration for {section}: {e}",
                                     config_key=section, config_value=config_data)

    def _check_cross_fields(self):
        widths = self.readout.hidden_widths
        if not widths or any(isinstance(w, bool) or not isinstance(w, int) or w < 1 for w in widths):
            raise ConfigurationError("readout.hidden_widths must be positive integers",
                                     config_key="readout.hidden_widths", config_value=widths)
        if widths[-1] != 1:
            raise ConfigurationError("readout.hidden_widths must end with 1",
                                     config_key="readout.hidden_widths", config_value=widths)
        if self.synth.min_objects > self.synth.max_objects:
            raise ConfigurationError("synth.min_objects exceeds synth.max_objects",
                                     config_key="synth.min_objects", config_value=self.synth.min_objects)
        if self.synth.min_box_cells > self.synth.max_box_cells:
            raise ConfigurationError("synth.min_box_cells exceeds synth.max_box_cells",
                                     config_key="synth.min_box_cells",
                                     config_value=self.synth.min_box_cells)
        if self.experiments.train_fraction + self.experiments.val_fraction > 1:
            raise ConfigurationError("experiments train_fraction + val_fraction exceeds 1",
                                     config_key="experiments.val_fraction",
                                     config_value=self.experiments.val_fraction)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "dissimilarity": asdict(self.dissimilarity),
            "detections": {"confidence_threshold": self.confidence_threshold},
            "readout": asdict(self.readout),
            "training": asdict(self.training),
            "evaluation": asdict(self.evaluation),
            "synth": asdict(self.synth),
            "experiments": asdict(self.experiments),
        }
