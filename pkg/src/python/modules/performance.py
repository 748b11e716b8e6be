"""
Performance monitoring utilities
"""
import time
import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from functools import wraps
from typing import Any, Dict

import psutil

logger = logging.getLogger(__name__)


@dataclass
class PerformanceMetrics:
    """Container for run metrics"""
    wall_time_seconds: float
    expectation_calls: int
    calls_by_operation: Dict[str, int] = field(default_factory=dict)
    peak_memory_mb: float = 0.0
    slowest_operation: str = ""
    slowest_seconds: float = 0.0


class PerformanceMonitor:
    """Counts expectation calls and tracks wall time and peak memory"""

    def __init__(self):
        self.start_time = time.time()
        self.call_counts: Counter = Counter()
        self.peak_memory_mb = 0.0
        self.slowest_operation = ""
        self.slowest_seconds = 0.0
        self._lock = threading.Lock()

    def record_call(self, operation_type: str = "expectation", count: int = 1):
        """Record one or more calls of an operation type"""
        with self._lock:
            self.call_counts[operation_type] += count

    def record_duration(self, operation: str, seconds: float):
        """Keep track of the slowest single operation"""
        with self._lock:
            if seconds > self.slowest_seconds:
                self.slowest_seconds = seconds
                self.slowest_operation = operation

    def record_system_metrics(self):
        """Sample resident memory and keep the peak"""
        try:
            memory_mb = psutil.Process().memory_info().rss / (1024 * 1024)
            with self._lock:
                self.peak_memory_mb = max(self.peak_memory_mb, memory_mb)
            logger.debug(f"Recorded memory: {memory_mb:.1f}MB")
        except psutil.Error as e:
            logger.error(f"Failed to record system metrics: {str(e)}")

    @property
    def expectation_calls(self) -> int:
        with self._lock:
            return self.call_counts.get('expectation', 0)

    def get_metrics(self) -> PerformanceMetrics:
        """Snapshot of the metrics collected so far"""
        self.record_system_metrics()
        with self._lock:
            return PerformanceMetrics(
                wall_time_seconds=time.time() - self.start_time,
                expectation_calls=self.call_counts.get('expectation', 0),
                calls_by_operation=dict(self.call_counts),
                peak_memory_mb=self.peak_memory_mb,
                slowest_operation=self.slowest_operation,
                slowest_seconds=self.slowest_seconds,
            )

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Summary mapping embedded in run manifests"""
        metrics = self.get_metrics()
        return {
            'wall_time_seconds': round(metrics.wall_time_seconds, 3),
            'expectation_calls': metrics.expectation_calls,
            'calls_by_operation': dict(sorted(metrics.calls_by_operation.items())),
            'peak_memory_mb': round(metrics.peak_memory_mb, 1),
            'slowest_operation': metrics.slowest_operation,
            'slowest_seconds': round(metrics.slowest_seconds, 3),
        }


# Global performance monitor instance
_performance_monitor = None


def get_performance_monitor() -> PerformanceMonitor:
    """Get or create the global performance monitor instance"""
    global _performance_monitor
    if _performance_monitor is None:
        _performance_monitor = PerformanceMonitor()
    return _performance_monitor


def reset_performance_monitor() -> PerformanceMonitor:
    """Replace the global monitor with a fresh one"""
    global _performance_monitor
    _performance_monitor = PerformanceMonitor()
    return _performance_monitor


def monitor_performance(operation_type: str = "general"):
    """Decorator to count calls of an operation and flag slow ones"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            monitor = get_performance_monitor()
            start_time = time.time()

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration = time.time() - start_time
                logger.error(f"{func.__name__} ({operation_type}) failed after {duration:.2f}s: {str(e)}")
                raise

            duration = time.time() - start_time
            monitor.record_call(operation_type)

            # Hot paths such as expectation calls stay silent unless slow
            if duration > 5.0:
                logger.warning(f"{func.__name__} ({operation_type}) took {duration:.2f}s - performance issue detected")
                monitor.record_duration(func.__name__, duration)
            elif duration > 1.0:
                logger.info(f"{func.__name__} ({operation_type}) took {duration:.2f}s")
                monitor.record_duration(func.__name__, duration)

            return result

        return wrapper
    return decorator
