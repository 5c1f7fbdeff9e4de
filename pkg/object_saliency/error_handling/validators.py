"""Input validation utilities."""

from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from .exceptions import ValidationError, ShapeMismatchError, FileSystemError


class InputValidator:
    """Validates tensors, numeric ranges, and paths."""

    @staticmethod
    def validate_finite(name: str, values: np.ndarray) -> np.ndarray:
        """Reject arrays holding NaN or infinity."""
        if not np.all(np.isfinite(values)):
            bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
            raise ValidationError(f"{name} contains {bad} non-finite value(s)",
                                  field_name=name, validation_rule="finite")
        return values

    @staticmethod
    def validate_nonnegative(name: str, values: np.ndarray) -> np.ndarray:
        """Reject arrays with negative entries."""
        if values.size and float(values.min()) < 0.0:
            raise ValidationError(f"{name} has negative entries (min {float(values.min())})",
                                  field_name=name, field_value=float(values.min()),
                                  validation_rule="nonnegative")
        return values

    @staticmethod
    def validate_same_shape(name: str, first: Sequence[int], second: Sequence[int]) -> None:
        """Reject two shapes that differ."""
        if tuple(first) != tuple(second):
            raise ShapeMismatchError(f"{name}: shape {tuple(second)} does not match {tuple(first)}",
                                     field_name=name, expected=first, actual=second)

    @staticmethod
    def validate_count(name: str, value: Any, minimum: int = 1) -> int:
        """Validate an integer count with a lower bound."""
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise ValidationError(f"{name} must be an integer: {value!r}",
                                  field_name=name, field_value=value, validation_rule="integer")
        if value < minimum:
            raise ValidationError(f"{name} must be >= {minimum}: {value}",
                                  field_name=name, field_value=value,
                                  validation_rule=f"min_{minimum}")
        return int(value)

    @staticmethod
    def validate_config_value(key: str, value: Any, expected_type: Union[type, tuple],
                              min_value: Optional[Union[int, float]] = None,
                              max_value: Optional[Union[int, float]] = None,
                              exclusive_min: bool = False) -> Dict[str, Any]:
        """Validate a configuration value's type and range."""
        if isinstance(value, bool) and expected_type is not bool:
            raise ValidationError(f"Config {key} must not be a boolean: {value}",
                                  field_name=key, field_value=value, validation_rule="not_bool")
        if not isinstance(value, expected_type):
            type_name = getattr(expected_type, "__name__", str(expected_type))
            raise ValidationError(f"Config {key} must be {type_name}: {type(value).__name__}",
                                  field_name=key, field_value=str(value),
                                  validation_rule=f"type_{type_name}")

        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if not np.isfinite(value):
                raise ValidationError(f"Config {key} must be finite: {value}",
                                      field_name=key, field_value=value, validation_rule="finite")
            if min_value is not None:
                too_small = value <= min_value if exclusive_min else value < min_value
                if too_small:
                    op = ">" if exclusive_min else ">="
                    raise ValidationError(f"Config {key} must be {op} {min_value}: {value}",
                                          field_name=key, field_value=value,
                                          validation_rule=f"min_{min_value}")

            if max_value is not None and value > max_value:
                raise ValidationError(f"Config {key} must be <= {max_value}: {value}",
                                      field_name=key, field_value=value,
                                      validation_rule=f"max_{max_value}")

        return {"key": key, "value": value, "valid": True}

    @staticmethod
    def validate_input_file(file_path: Union[str, Path]) -> Path:
        """Validate that a file exists and is a regular file."""
        if not file_path:
            raise ValidationError("File path cannot be empty", field_name="file_path")

        path = Path(file_path)
        if not path.exists():
            raise FileSystemError(f"File not found: {file_path}",
                                  file_path=str(file_path), operation="read")
        if not path.is_file():
            raise ValidationError(f"Path is not a file: {file_path}",
                                  field_name="file_path", field_value=str(file_path))
        return path

