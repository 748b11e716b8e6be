"""
Logging configuration and exception types for the aGPSR toolkit
"""
import logging
import sys
import time
from functools import wraps
from pathlib import Path


def setup_logging(log_level='INFO', log_file=None):
    """
    Set up logging configuration for the toolkit

    Console output goes to stderr so that data written to stdout stays clean.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional log file path. If None, logs to console only.
    """
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    level = getattr(logging, str(log_level).upper(), logging.INFO)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Repeated calls replace the previous handlers
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        if isinstance(handler, logging.FileHandler):
            handler.close()

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_path, encoding="utf-8"))

    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    # Third-party libraries are chatty at DEBUG
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    logging.getLogger('numexpr').setLevel(logging.WARNING)

    return root_logger


def log_performance(func):
    """Decorator to log the duration of long-running operations"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        logger = logging.getLogger(func.__module__)
        start_time = time.time()

        try:
            logger.debug(f"Starting {func.__name__}")
            result = func(*args, **kwargs)
            duration = time.time() - start_time

            if duration > 1.0:
                logger.info(f"{func.__name__} completed in {duration:.2f}s")
            else:
                logger.debug(f"{func.__name__} completed in {duration:.3f}s")

            return result

        except Exception as e:
            duration = time.time() - start_time
            logger.error(f"{func.__name__} failed after {duration:.2f}s: {str(e)}", exc_info=True)
            raise

    return wrapper


class ValidationError(Exception):
    """Custom exception for input validation"""
    pass


class ConfigurationError(Exception):
    """Custom exception for configuration issues"""
    pass


class DimensionMismatchError(ValidationError):
    """Raised when operator and state dimensions disagree"""
    pass


class NonHermitianError(ValidationError):
    """Raised when a matrix that must be Hermitian is not"""
    pass


class ConvergenceError(Exception):
    """Raised when an iterative numerical routine does not converge"""
    pass


class SingularSystemError(Exception):
    """Raised when a linear system is singular or too ill-conditioned to solve"""

    def __init__(self, message, condition_estimate=float('inf'), hint=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate
        self.hint = hint

    def __str__(self):
        text = f"{self.args[0]} (condition estimate {self.condition_estimate:.3e})"
        if self.hint:
            text += f"; {self.hint}"
        return text


class ExportError(Exception):
    """Raised when a result artifact cannot be written"""
    pass
