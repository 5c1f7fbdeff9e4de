"""Exception hierarchy, error handler and input validation."""

from .exceptions import (
    ObjectSaliencyError,
    ValidationError,
    ShapeMismatchError,
    DegenerateMapError,
    DetectionError,
    FileFormatError,
    BadMagicError,
    TruncatedFileError,
    NonFinitePayloadError,
    DetectionFormatError,
    ConfigurationError,
    FileSystemError,
    UsageError,
    NumericalError,
    TrainingDivergedError,
    ConvergenceError,
    GradientCheckError,
)
from .handlers import ErrorHandler, exit_code_for, handle_errors
from .validators import InputValidator

__all__ = [
    'ObjectSaliencyError',
    'ValidationError',
    'ShapeMismatchError',
    'DegenerateMapError',
    'DetectionError',
    'FileFormatError',
    'BadMagicError',
    'TruncatedFileError',
    'NonFinitePayloadError',
    'DetectionFormatError',
    'ConfigurationError',
    'FileSystemError',
    'UsageError',
    'NumericalError',
    'TrainingDivergedError',
    'ConvergenceError',
    'GradientCheckError',
    'ErrorHandler',
    'exit_code_for',
    'handle_errors',
    'InputValidator',
]
