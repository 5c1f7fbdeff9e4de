"""Operation timing and memory monitoring."""

from .monitor import PerformanceMetrics, PerformanceMonitor, monitor_performance, global_monitor

__all__ = [
    'PerformanceMetrics',
    'PerformanceMonitor',
    'monitor_performance',
    'global_monitor'
]
