"""Timing and memory monitoring for the long-running operations."""

import functools
import itertools
import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import psutil

logger = logging.getLogger(__name__)


@dataclass
class PerformanceMetrics:
    """Duration and resident-memory change of one monitored call."""
    operation_name: str
    start_time: float
    end_time: Optional[float] = None
    duration: Optional[float] = None
    memory_start: float = 0.0
    memory_end: Optional[float] = None
    memory_delta: Optional[float] = None
    success: bool = True
    error_message: Optional[str] = None
    additional_data: Dict[str, Any] = field(default_factory=dict)

    def complete(self, success: bool = True, error_message: Optional[str] = None):
        """Mark operation as complete and calculate metrics."""
        self.end_time = time.perf_counter()
        self.duration = self.end_time - self.start_time
        self.memory_end = self._get_memory_usage()
        self.memory_delta = self.memory_end - self.memory_start
        self.success = success
        self.error_message = error_message

    @staticmethod
    def _get_memory_usage() -> float:
        """Current resident set size in MB."""
        return psutil.Process().memory_info().rss / 1024 / 1024


class PerformanceMonitor:
    """Collects PerformanceMetrics per operation name.

    Safe to use from the worker threads of the experiment runner: every
    start gets its own token, so concurrent calls of the same operation do
    not overwrite each other.
    """

    def __init__(self):
        self.metrics: Dict[str, List[PerformanceMetrics]] = {}
        self.current_operations: Dict[int, PerformanceMetrics] = {}
        self._tokens = itertools.count()
        self._lock = threading.Lock()

    @contextmanager
    def monitor_operation(self, operation_name: str, **additional_data):
        """Context manager for monitoring operations."""
        token = self.start_operation(operation_name, **additional_data)
        success = True
        error_message = None
        try:
            yield self.current_operations[token]
        except Exception as e:
            success = False
            error_message = str(e)
            raise
        finally:
            self.end_operation(token, success=success, error_message=error_message)

    def start_operation(self, operation_name: str, **additional_data) -> int:
        """Start monitoring an operation; returns the token for end_operation."""
        metrics = PerformanceMetrics(
            operation_name=operation_name,
            start_time=time.perf_counter(),
            memory_start=PerformanceMetrics._get_memory_usage(),
            additional_data=additional_data
        )
        with self._lock:
            token = next(self._tokens)
            self.current_operations[token] = metrics
        return token

    def end_operation(self, token: int, success: bool = True,
                      error_message: Optional[str] = None):
        """End monitoring an operation."""
        with self._lock:
            metrics = self.current_operations.pop(token, None)
        if metrics is None:
            return
        metrics.complete(success, error_message)
        with self._lock:
            self.metrics.setdefault(metrics.operation_name, []).append(metrics)
        logger.debug(f"{metrics.operation_name}: {metrics.duration:.3f}s, "
                     f"{metrics.memory_delta:+.1f} MB")

    def get_operation_stats(self, operation_name: str) -> Dict[str, Any]:
        """Get statistics for an operation type."""
        operations = self.metrics.get(operation_name)
        if not operations:
            return {}

        successful_ops = [op for op in operations if op.success]
        if not successful_ops:
            return {"operation_name": operation_name, "count": len(operations), "success_count": 0}

        durations = [op.duration for op in successful_ops if op.duration is not None]
        memory_deltas = [op.memory_delta for op in successful_ops if op.memory_delta is not None]

        return {
            "operation_name": operation_name,
            "count": len(operations),
            "success_count": len(successful_ops),
            "success_rate": len(successful_ops) / len(operations),
            "total_duration": sum(durations),
            "avg_duration": sum(durations) / len(durations) if durations else 0,
            "max_duration": max(durations) if durations else 0,
            "avg_memory_delta": sum(memory_deltas) / len(memory_deltas) if memory_deltas else 0,
            "max_memory_delta": max(memory_deltas) if memory_deltas else 0
        }

    def get_all_stats(self) -> Dict[str, Dict[str, Any]]:
        """Get statistics for all monitored operations."""
        return {name: self.get_operation_stats(name) for name in sorted(self.metrics)}

    def format_stats(self) -> str:
        """Render the collected statistics as a text table."""
        lines = [f"{'operation':<28}{'calls':>6}{'total s':>10}{'avg s':>10}{'max MB':>9}"]
        for name, stats in self.get_all_stats().items():
            if not stats.get("success_count"):
                lines.append(f"{name:<28}{stats.get('count', 0):>6}{'failed':>10}")
                continue
            lines.append(f"{name:<28}{stats['count']:>6}{stats['total_duration']:>10.3f}"
                         f"{stats['avg_duration']:>10.3f}{stats['max_memory_delta']:>9.1f}")
        return "\n".join(lines)

    def clear_metrics(self):
        """Clear all stored metrics."""
        with self._lock:
            self.metrics.clear()
            self.current_operations.clear()


def monitor_performance(operation_name: str):
    """Decorator that records each call under ``operation_name``."""
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with global_monitor.monitor_operation(operation_name):
                return func(*args, **kwargs)

        return wrapper
    return decorator


# Global performance monitor instance
global_monitor = PerformanceMonitor()
