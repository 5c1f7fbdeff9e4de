"""Custom exceptions for the object-saliency package."""

from typing import Optional, Dict, Any, Sequence


class ObjectSaliencyError(Exception):
    """Base exception for the object-saliency package."""

    def __init__(self, message: str, error_code: Optional[str] = None,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary for logging/reporting."""
        return {
            "type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "details": self.details
        }


class ValidationError(ObjectSaliencyError):
    """Raised when an input violates a precondition."""

    def __init__(self, message: str, field_name: Optional[str] = None,
                 field_value: Optional[Any] = None, validation_rule: Optional[str] = None,
                 **kwargs):
        super().__init__(message, **kwargs)
        self.field_name = field_name
        self.field_value = field_value
        self.validation_rule = validation_rule

        if field_name:
            self.details["field_name"] = field_name
        if field_value is not None:
            self.details["field_value"] = str(field_value)
        if validation_rule:
            self.details["validation_rule"] = validation_rule


class ShapeMismatchError(ValidationError):
    """Raised when two tensors that must agree in shape do not."""

    def __init__(self, message: str, expected: Optional[Sequence[int]] = None,
                 actual: Optional[Sequence[int]] = None, **kwargs):
        kwargs.setdefault("validation_rule", "shapes_agree")
        super().__init__(message, **kwargs)
        self.expected = tuple(expected) if expected is not None else None
        self.actual = tuple(actual) if actual is not None else None
        if expected is not None:
            self.details["expected_shape"] = self.expected
        if actual is not None:
            self.details["actual_shape"] = self.actual


class DegenerateMapError(ObjectSaliencyError):
    """Raised when a map has zero variance or no fixations where a metric needs them."""

    def __init__(self, message: str, map_name: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.map_name = map_name
        if map_name:
            self.details["map_name"] = map_name


class DetectionError(ObjectSaliencyError):
    """Raised when a detection box cannot be used."""

    def __init__(self, message: str, detection: Optional[Any] = None,
                 index: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.detection = detection
        self.index = index
        if detection is not None:
            self.details["detection"] = str(detection)
        if index is not None:
            self.details["index"] = index


class FileFormatError(ObjectSaliencyError):
    """Raised when an on-disk artifact cannot be parsed."""

    def __init__(self, message: str, file_path: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.file_path = file_path
        if file_path:
            self.details["file_path"] = file_path


class BadMagicError(FileFormatError):
    """Raised when a binary file does not start with the expected magic."""


class TruncatedFileError(FileFormatError):
    """Raised when a binary file holds fewer (or more) bytes than its header announces."""


class NonFinitePayloadError(FileFormatError):
    """Raised when a tensor payload contains NaN or infinity."""


class DetectionFormatError(FileFormatError):
    """Raised when a line of a detection file is malformed."""

    def __init__(self, message: str, line_number: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.line_number = line_number
        if line_number is not None:
            self.details["line_number"] = line_number


class ConfigurationError(ObjectSaliencyError):
    """Raised when configuration-related errors occur."""

    def __init__(self, message: str, config_key: Optional[str] = None,
                 config_value: Optional[Any] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.config_key = config_key
        self.config_value = config_value
        if config_key:
            self.details["config_key"] = config_key
        if config_value is not None:
            self.details["config_value"] = str(config_value)


class FileSystemError(ObjectSaliencyError):
    """Raised when file system operations fail."""

    def __init__(self, message: str, file_path: Optional[str] = None,
                 operation: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.file_path = file_path
        self.operation = operation

        if file_path:
            self.details["file_path"] = file_path
        if operation:
            self.details["operation"] = operation


class UsageError(ObjectSaliencyError):
    """Raised when the command line cannot be parsed."""

    def __init__(self, message: str, subcommand: Optional[str] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.subcommand = subcommand
        if subcommand:
            self.details["subcommand"] = subcommand


class NumericalError(ObjectSaliencyError):
    """Base class for numerical failures (divergence, non-convergence, bad gradients)."""


class TrainingDivergedError(NumericalError):
    """Raised when the training loss becomes non-finite."""

    def __init__(self, message: str, epoch: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.epoch = epoch
        if epoch is not None:
            self.details["epoch"] = epoch


class ConvergenceError(NumericalError):
    """Raised when an iterative routine hits its iteration cap."""

    def __init__(self, message: str, iterations: Optional[int] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.iterations = iterations
        if iterations is not None:
            self.details["iterations"] = iterations


class GradientCheckError(NumericalError):
    """Raised when analytic and finite-difference gradients disagree."""

    def __init__(self, message: str, max_relative_error: Optional[float] = None, **kwargs):
        super().__init__(message, **kwargs)
        self.max_relative_error = max_relative_error
        if max_relative_error is not None:
            self.details["max_relative_error"] = max_relative_error
