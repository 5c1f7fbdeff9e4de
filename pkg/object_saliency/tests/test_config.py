"""Tests for configuration management."""

import json
import shutil
import tempfile
import unittest
from pathlib import Path

from object_saliency.config.manager import ConfigManager
from object_saliency.config.settings import SettingsManager
from object_saliency.dissimilarity import DissimilarityConfig
from object_saliency.readout import TrainConfig
from object_saliency.error_handling.exceptions import ConfigurationError


class TestConfigManager(unittest.TestCase):
    """Test configuration manager functionality."""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
        self.config_path = self.temp_dir / "test_config.json"
        self.config_manager = ConfigManager(str(self.config_path))

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_default_config_creation(self):
        self.assertTrue(self.config_path.exists())
        on_disk = json.loads(self.config_path.read_text())
        self.assertEqual(on_disk, ConfigManager.DEFAULT_CONFIG)

    def test_in_memory_defaults(self):
        manager = ConfigManager()
        self.assertIsNone(manager.config_path)
        manager.update_setting("training.epochs", 3)
        self.assertEqual(manager.get_setting("training.epochs"), 3)
        self.assertEqual(ConfigManager.DEFAULT_CONFIG["training"]["epochs"], 10)

    def test_get_setting(self):
        self.assertEqual(self.config_manager.get_setting("dissimilarity.distance"), "cosine")
        self.assertEqual(self.config_manager.get_setting("detections.confidence_threshold"), 0.7)
        self.assertEqual(self.config_manager.get_setting("nonexistent.key", "default"), "default")
        self.assertEqual(self.config_manager.get_setting("training.loss.deeper", 1), 1)

    def test_update_setting_persists(self):
        self.config_manager.update_setting("training.learning_rate", 0.01)
        self.config_manager.update_setting("custom.nested.value", "x")
        reloaded = ConfigManager(str(self.config_path))
        self.assertEqual(reloaded.get_setting("training.learning_rate"), 0.01)
        self.assertEqual(reloaded.get_setting("custom.nested.value"), "x")

    def test_partial_file_merged_with_defaults(self):
        partial = self.temp_dir / "partial.json"
        partial.write_text(json.dumps({"training": {"epochs": 4}}))
        manager = ConfigManager(str(partial))
        self.assertEqual(manager.get_setting("training.epochs"), 4)
        self.assertEqual(manager.get_setting("training.batch_size"), 2)
        self.assertEqual(manager.get_setting("readout.hidden_widths"), [16, 8, 4, 1])

    def test_unreadable_file(self):
        broken = self.temp_dir / "broken.json"
        broken.write_text("{not json")
        with self.assertRaises(ConfigurationError):
            ConfigManager(str(broken))
        listing = self.temp_dir / "list.json"
        listing.write_text("[1, 2]")
        with self.assertRaises(ConfigurationError):
            ConfigManager(str(listing))


class TestSettingsManager(unittest.TestCase):
    """Typed sections and their validation."""

    def _settings(self, **overrides):
        manager = ConfigManager()
        for key, value in overrides.items():
            manager.update_setting(key.replace("__", "."), value)
        return SettingsManager(manager)

    def test_defaults(self):
        settings = self._settings()
        self.assertEqual(settings.dissimilarity, DissimilarityConfig())
        self.assertEqual(settings.training, TrainConfig())
        self.assertEqual(settings.readout.hidden_widths, [16, 8, 4, 1])
        self.assertEqual(settings.confidence_threshold, 0.7)
        self.assertEqual(settings.experiments.detection_source, "predicted")
        self.assertEqual(settings.synth.channels, 8)

    def test_overrides_reach_dataclasses(self):
        settings = self._settings(training__loss="eml", dissimilarity__distance="svcca",
                                  readout__smooth_sigma=1.5)
        self.assertEqual(settings.training.loss, "eml")
        self.assertEqual(settings.dissimilarity.distance, "svcca")
        self.assertEqual(settings.readout.smooth_sigma, 1.5)
        self.assertEqual(settings.as_dict()["training"]["loss"], "eml")

    def test_invalid_values(self):
        cases = {
            "training__learning_rate": -1.0,
            "training__epochs": 0,
            "training__loss": "mse",
            "dissimilarity__distance": "euclidean",
            "dissimilarity__energy_fraction": 0.0,
            "detections__confidence_threshold": 1.5,
            "experiments__detection_source": "oracle",
            "readout__hidden_widths": [4, 2],
            "synth__min_objects": 9,
            "experiments__val_fraction": 0.5,
        }
        for key, value in cases.items():
            with self.subTest(key=key):
                with self.assertRaises(ConfigurationError) as ctx:
                    self._settings(**{key: value})
                self.assertIn("config_key", ctx.exception.details)

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError) as ctx:
            self._settings(training__momentum=0.9)
        self.assertIn("momentum", ctx.exception.message)

    def test_section_must_be_object(self):
        manager = ConfigManager()
        manager.config["evaluation"] = 3
        with self.assertRaises(ConfigurationError):
            SettingsManager(manager)


if __name__ == "__main__":
    unittest.main()
