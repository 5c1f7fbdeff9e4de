"""Configuration management for object-saliency."""

import copy
import json
import logging
from pathlib import Path
from typing import Dict, Any, Optional

from ..error_handling.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class ConfigManager:
    """Manages run configuration.

    Without a path the defaults stay in memory. With a path that does not
    exist yet, the defaults are written there so the file can be edited.
    """

    DEFAULT_CONFIG = {
        "dissimilarity": {
            "eps": 1e-8,
            "distance": "cosine",
            "energy_fraction": 0.99,
            "tie_tolerance": 1e-9
        },
        "detections": {
            "confidence_threshold": 0.7
        },
        "readout": {
            "hidden_widths": [16, 8, 4, 1],
            "smooth_sigma": 0.0,
            "center_bias": False,
            "init_seed": 0
        },
        "training": {
            "learning_rate": 1e-4,
            "batch_size": 2,
            "epochs": 10,
            "loss": "kld",
            "seed": 0,
            "beta1": 0.9,
            "beta2": 0.999,
            "adam_eps": 1e-8,
            "kld_eps": 1e-7
        },
        "evaluation": {
            "kld_eps": 1e-7,
            "sauc_splits": 10,
            "sauc_seed": 0
        },
        "synth": {
            "grid_height": 24,
            "grid_width": 32,
            "image_width": 64,
            "image_height": 48,
            "categories": 4,
            "channels_per_category": 2,
            "max_objects": 6,
            "fixations_per_scene": 16,
            "gt_blur_sigma": 1.0,
            "center_fraction": 0.15,
            "noise_std": 0.02,
            "false_negative_rate": 0.1,
            "false_positive_rate": 0.5,
            "max_false_positives": 2,
            "jitter": 1.0
        },
        "experiments": {
            "train_fraction": 0.6,
            "val_fraction": 0.2,
            "split_seed": 0,
            "detection_source": "predicted",
            "max_workers": 1
        },
        "logging": {
            "level": "WARNING",
            "file": None
        }
    }

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else None
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file or fall back to defaults."""
        if self.config_path is None:
            return copy.deepcopy(self.DEFAULT_CONFIG)

        if self.config_path.exists():
            try:
                with open(self.config_path, 'r') as f:
                    config = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"Error loading config {self.config_path}: {e}",
                                         config_key=str(self.config_path))
            if not isinstance(config, dict):
                raise ConfigurationError(f"Config {self.config_path} must hold a JSON object",
                                         config_key=str(self.config_path))
            return self._merge_with_defaults(config)

        logger.info(f"Writing default configuration to {self.config_path}")
        config = copy.deepcopy(self.DEFAULT_CONFIG)
        self.save_config(config)
        return config

    def _merge_with_defaults(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Merge loaded config with defaults to ensure all keys exist."""
        def merge_dict(default: Dict, loaded: Dict) -> Dict:
            result = copy.deepcopy(default)
            for key, value in loaded.items():
                if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                    result[key] = merge_dict(result[key], value)
                else:
                    result[key] = value
            return result

        return merge_dict(self.DEFAULT_CONFIG, config)

    def save_config(self, config: Optional[Dict[str, Any]] = None):
        """Save configuration to file (no-op for in-memory configs)."""
        if config is None:
            config = self.config
        if self.config_path is None:
            return

        try:
            self.config_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_path, 'w') as f:
                json.dump(config, f, indent=2)
        except OSError as e:
            logger.warning(f"Error saving config: {e}")

    def get_setting(self, key_path: str, default=None):
        """Get a setting using dot notation (e.g., 'training.learning_rate')."""
        keys = key_path.split('.')
        value = self.config

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def update_setting(self, key_path: str, value: Any):
        """Update a setting using dot notation."""
        keys = key_path.split('.')
        current = self.config

        for key in keys[:-1]:
            if key not in current:
                current[key] = {}
            current = current[key]

        current[keys[-1]] = value
        self.save_config()
