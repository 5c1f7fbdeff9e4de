"""Error handling, logging setup and exit-code mapping."""

import logging
import traceback
from typing import Dict, Any, Optional, Callable
from functools import wraps
import time

from .exceptions import (
    ObjectSaliencyError, ValidationError, DegenerateMapError, DetectionError,
    FileFormatError, FileSystemError, ConfigurationError, UsageError, NumericalError,
    TrainingDivergedError, ConvergenceError, GradientCheckError
)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ErrorHandler:
    """Centralized error handling and logging."""

    def __init__(self, log_file: Optional[str] = None, level: int = logging.INFO):
        self.logger = self._setup_logger(log_file, level)
        self.error_counts: Dict[str, int] = {}

    def _setup_logger(self, log_file: Optional[str] = None,
                      level: int = logging.INFO) -> logging.Logger:
        """Set up logging configuration."""
        logger = logging.getLogger("object_saliency")
        logger.setLevel(level)

        # Avoid adding multiple handlers
        if logger.handlers:
            return logger

        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        logger.addHandler(console_handler)

        if log_file:
            self._attach_file_handler(logger, log_file)

        return logger

    @staticmethod
    def _attach_file_handler(logger: logging.Logger, log_file: str):
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        ))
        logger.addHandler(file_handler)

    def add_log_file(self, log_file: str):
        """Also write DEBUG and above to ``log_file``."""
        self._attach_file_handler(self.logger, log_file)

    def set_console_level(self, level: int):
        """Adjust the verbosity of the console handler."""
        for handler in self.logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(level)

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Log an error and return the information a caller needs to report it."""
        error_info = self._extract_error_info(error, context)
        self._log_error(error_info)

        error_type = error_info["type"]
        self.error_counts[error_type] = self.error_counts.get(error_type, 0) + 1

        return {
            "error_id": error_info["error_id"],
            "message": error_info["user_message"],
            "recoverable": error_info["recoverable"],
            "suggested_action": error_info["suggested_action"],
            "exit_code": error_info["exit_code"]
        }

    def _extract_error_info(self, error: Exception,
                            context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Extract comprehensive error information."""
        error_id = f"ERR_{int(time.time() * 1000) % 1000000:06d}"

        if isinstance(error, ObjectSaliencyError):
            error_info = error.to_dict()
            user_message = error.message
            recoverable = self._is_recoverable_error(error)
            suggested_action = self.suggested_action(error)
        else:
            error_info = {
                "type": type(error).__name__,
                "message": str(error),
                "details": {}
            }
            user_message = f"An unexpected error occurred: {str(error)}"
            recoverable = False
            suggested_action = "Re-run with --verbose and inspect the log"

        return {
            "error_id": error_id,
            "timestamp": time.time(),
            "type": error_info["type"],
            "message": error_info["message"],
            "user_message": user_message,
            "details": error_info.get("details", {}),
            "context": context or {},
            "traceback": traceback.format_exc(),
            "recoverable": recoverable,
            "suggested_action": suggested_action,
            "exit_code": exit_code_for(error)
        }

    def _is_recoverable_error(self, error: ObjectSaliencyError) -> bool:
        """Errors that a retry with other settings can plausibly fix."""
        return isinstance(error, (TrainingDivergedError, ConvergenceError, DegenerateMapError))

    def suggested_action(self, error: Exception) -> str:
        """Get suggested action for specific error types."""
        suggestions = [
            (TrainingDivergedError, "Lower the learning rate or switch the loss to kld"),
            (ConvergenceError, "Check the input matrix for NaN or extreme scaling"),
            (GradientCheckError, "Inspect the reported parameter; the analytic gradient is wrong"),
            (DegenerateMapError, "The map is constant or has no fixations; the metric is undefined"),
            (DetectionError, "Check the box coordinates against the image size"),
            (FileFormatError, "The file is corrupt or was written by another tool"),
            (FileSystemError, "Verify the path exists and is writable"),
            (ConfigurationError, "Fix the named configuration key"),
            (UsageError, "Run with --help for the list of options"),
            (ValidationError, "Check the named input"),
        ]
        for error_type, suggestion in suggestions:
            if isinstance(error, error_type):
                return suggestion
        return "Re-run with --verbose and inspect the log"

    def _log_error(self, error_info: Dict[str, Any]):
        """Log error information."""
        log_message = (
            f"[{error_info['error_id']}] {error_info['type']}: {error_info['message']}"
        )

        if error_info["details"]:
            log_message += f" | Details: {error_info['details']}"

        if error_info["context"]:
            log_message += f" | Context: {error_info['context']}"

        self.logger.error(log_message)

        if error_info["traceback"]:
            self.logger.debug(f"Traceback for {error_info['error_id']}:\n{error_info['traceback']}")

    def get_error_stats(self) -> Dict[str, Any]:
        """Counts of handled errors by type."""
        return {
            "total_errors": sum(self.error_counts.values()),
            "error_counts": self.error_counts.copy(),
        }

    def format_error_summary(self) -> str:
        """One line for --profile, empty when nothing was handled."""
        stats = self.get_error_stats()
        if not stats["total_errors"]:
            return ""
        counts = ", ".join(f"{name} x{count}" for name, count in sorted(stats["error_counts"].items()))
        return f"errors handled: {stats['total_errors']} ({counts})"


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit status."""
    if isinstance(error, UsageError):
        return EXIT_USAGE
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, ArithmeticError):
        return EXIT_NUMERICAL
    return EXIT_DATA


def handle_errors(error_handler: Optional[ErrorHandler] = None, **context_fields):
    """Decorator that logs any escaping exception with context and re-raises it."""
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            handler = error_handler or global_error_handler
            try:
                return func(*args, **kwargs)
            except Exception as e:
                context = {"function": func.__name__}
                context.update(context_fields)
                handler.handle_error(e, context=context)
                raise

        return wrapper
    return decorator


global_error_handler = ErrorHandler()
