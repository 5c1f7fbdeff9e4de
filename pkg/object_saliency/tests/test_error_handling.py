"""Tests for error handling and validation components."""

import logging
import tempfile
import unittest
from pathlib import Path
from unittest.mock import Mock

import numpy as np

from object_saliency.error_handling.exceptions import (
    ObjectSaliencyError, ValidationError, ShapeMismatchError, DegenerateMapError, DetectionError,
    FileFormatError, DetectionFormatError, ConfigurationError, FileSystemError, UsageError,
    NumericalError, TrainingDivergedError, ConvergenceError, GradientCheckError
)
from object_saliency.error_handling.handlers import (
    ErrorHandler, handle_errors, exit_code_for, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL
)
from object_saliency.error_handling.validators import InputValidator


class TestExceptions(unittest.TestCase):
    """Custom exception classes."""

    def test_base_exception(self):
        error = ObjectSaliencyError("Test error", error_code="TEST001", details={"key": "value"})

        self.assertEqual(error.message, "Test error")
        self.assertEqual(str(error), "Test error")
        error_dict = error.to_dict()
        self.assertEqual(error_dict["type"], "ObjectSaliencyError")
        self.assertEqual(error_dict["error_code"], "TEST001")
        self.assertEqual(error_dict["details"]["key"], "value")

    def test_validation_error(self):
        error = ValidationError("bad", field_name="sigma", field_value=-1, validation_rule="min_0")
        self.assertEqual(error.details, {"field_name": "sigma", "field_value": "-1",
                                         "validation_rule": "min_0"})

    def test_shape_mismatch(self):
        error = ShapeMismatchError("shapes", field_name="kld", expected=[3, 4], actual=(4, 3))
        self.assertIsInstance(error, ValidationError)
        self.assertEqual(error.expected, (3, 4))
        self.assertEqual(error.details["actual_shape"], (4, 3))
        self.assertEqual(error.details["validation_rule"], "shapes_agree")

    def test_domain_details(self):
        self.assertEqual(DetectionFormatError("x", line_number=7, file_path="d.txt").details,
                         {"file_path": "d.txt", "line_number": 7})
        self.assertEqual(TrainingDivergedError("x", epoch=3).details["epoch"], 3)
        self.assertEqual(ConvergenceError("x", iterations=60).details["iterations"], 60)
        self.assertEqual(GradientCheckError("x", max_relative_error=0.1).details["max_relative_error"], 0.1)
        self.assertEqual(DegenerateMapError("x", map_name="prediction").details["map_name"], "prediction")
        self.assertEqual(DetectionError("x", index=2).details["index"], 2)
        self.assertEqual(UsageError("x", subcommand="train").details["subcommand"], "train")
        self.assertEqual(ConfigurationError("x", config_key="a.b", config_value=0).details,
                         {"config_key": "a.b", "config_value": "0"})

    def test_hierarchy(self):
        self.assertTrue(issubclass(DetectionFormatError, FileFormatError))
        for cls in (TrainingDivergedError, ConvergenceError, GradientCheckError):
            self.assertTrue(issubclass(cls, NumericalError))


class TestExitCodes(unittest.TestCase):

    def test_mapping(self):
        self.assertEqual(exit_code_for(UsageError("x")), EXIT_USAGE)
        self.assertEqual(exit_code_for(ConvergenceError("x")), EXIT_NUMERICAL)
        self.assertEqual(exit_code_for(FloatingPointError()), EXIT_NUMERICAL)
        for error in (ValidationError("x"), FileSystemError("x"), FileFormatError("x"),
                      ConfigurationError("x"), KeyError("x")):
            with self.subTest(error=type(error).__name__):
                self.assertEqual(exit_code_for(error), EXIT_DATA)


class TestErrorHandler(unittest.TestCase):
    """Centralized logging and reporting."""

    def setUp(self):
        self.handler = ErrorHandler()

    def test_handle_error(self):
        result = self.handler.handle_error(TrainingDivergedError("nan loss", epoch=2),
                                           context={"cell": "S+A"})
        self.assertEqual(result["message"], "nan loss")
        self.assertTrue(result["recoverable"])
        self.assertEqual(result["exit_code"], EXIT_NUMERICAL)
        self.assertIn("learning rate", result["suggested_action"])
        self.assertTrue(result["error_id"].startswith("ERR_"))
        self.assertEqual(self.handler.get_error_stats()["error_counts"], {"TrainingDivergedError": 1})

    def test_unexpected_error(self):
        result = self.handler.handle_error(RuntimeError("boom"))
        self.assertFalse(result["recoverable"])
        self.assertIn("boom", result["message"])
        self.assertEqual(result["exit_code"], EXIT_DATA)

    def test_suggested_action_prefers_specific_type(self):
        self.assertIn("box coordinates", self.handler.suggested_action(DetectionError("x")))
        self.assertIn("corrupt", self.handler.suggested_action(DetectionFormatError("x")))
        self.assertIn("named input", self.handler.suggested_action(ShapeMismatchError("x")))
        self.assertIn("--help", self.handler.suggested_action(UsageError("x")))

    def test_error_summary(self):
        self.assertEqual(self.handler.format_error_summary(), "")
        self.handler.handle_error(ConvergenceError("stuck", iterations=5))
        self.handler.handle_error(ConvergenceError("stuck again", iterations=9))
        self.handler.handle_error(UsageError("x"))
        self.assertEqual(self.handler.get_error_stats()["total_errors"], 3)
        self.assertEqual(self.handler.format_error_summary(),
                         "errors handled: 3 (ConvergenceError x2, UsageError x1)")

    def test_log_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.log"
            self.handler.add_log_file(str(path))
            try:
                self.handler.handle_error(FileSystemError("gone", file_path="/x"))
                for handler in self.handler.logger.handlers:
                    handler.flush()
                self.assertIn("FileSystemError: gone", path.read_text())
            finally:
                for handler in list(self.handler.logger.handlers):
                    if isinstance(handler, logging.FileHandler):
                        handler.close()
                        self.handler.logger.removeHandler(handler)

    def test_decorator_logs_and_reraises(self):
        handler = ErrorHandler()
        handler.handle_error = Mock()

        @handle_errors(error_handler=handler, subcommand="eval")
        def failing():
            raise DegenerateMapError("flat", map_name="prediction")

        with self.assertRaises(DegenerateMapError):
            failing()
        context = handler.handle_error.call_args[1]["context"]
        self.assertEqual(context, {"function": "failing", "subcommand": "eval"})

    def test_decorator_passes_results(self):
        @handle_errors()
        def fine(x):
            return x * 2

        self.assertEqual(fine(4), 8)


class TestInputValidator(unittest.TestCase):

    def test_finite_and_nonnegative(self):
        values = np.array([0.0, 1.0])
        self.assertIs(InputValidator.validate_finite("m", values), values)
        with self.assertRaises(ValidationError) as ctx:
            InputValidator.validate_finite("m", np.array([np.nan, np.inf, 1.0]))
        self.assertIn("2 non-finite", ctx.exception.message)
        with self.assertRaises(ValidationError):
            InputValidator.validate_nonnegative("m", np.array([0.5, -1e-9]))

    def test_same_shape(self):
        InputValidator.validate_same_shape("cc", (2, 3), [2, 3])
        with self.assertRaises(ShapeMismatchError):
            InputValidator.validate_same_shape("cc", (2, 3), (3, 2))

    def test_count(self):
        self.assertEqual(InputValidator.validate_count("n", np.int64(3)), 3)
        for bad in (0, True, 2.0, "3"):
            with self.subTest(value=bad):
                with self.assertRaises(ValidationError):
                    InputValidator.validate_count("n", bad)
        self.assertEqual(InputValidator.validate_count("k", 0, minimum=0), 0)

    def test_config_value(self):
        self.assertTrue(InputValidator.validate_config_value("lr", 0.1, (int, float), 0)["valid"])
        cases = [("lr", -0.1, (int, float), 0, None, False),
                 ("eps", 0.0, (int, float), 0, None, True),
                 ("fraction", 1.5, (int, float), 0, 1, False),
                 ("epochs", True, int, 1, None, False),
                 ("epochs", "ten", int, 1, None, False),
                 ("sigma", float("nan"), (int, float), 0, None, False)]
        for key, value, expected, low, high, exclusive in cases:
            with self.subTest(key=key, value=value):
                with self.assertRaises(ValidationError):
                    InputValidator.validate_config_value(key, value, expected, low, high, exclusive)

    def test_input_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "features.ftn"
            path.write_bytes(b"FTN1")
            self.assertEqual(InputValidator.validate_input_file(str(path)), path)
            with self.assertRaises(FileSystemError):
                InputValidator.validate_input_file(Path(tmp) / "missing.ftn")
            with self.assertRaises(ValidationError):
                InputValidator.validate_input_file(tmp)
            with self.assertRaises(ValidationError):
                InputValidator.validate_input_file("")


if __name__ == "__main__":
    unittest.main()
