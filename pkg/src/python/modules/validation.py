"""
Input validation and sanitization utilities
"""
import math
import logging
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from logging_config import ValidationError

logger = logging.getLogger(__name__)

COMMON_RUN_KEYS = {'seed', 'out_dir', 'threads'}

RUN_CONFIG_KEYS = {
    'scan': {'generator', 'initial_state', 'state_seed', 'observable', 'methods',
             'x_range', 'points', 'shots', 'derivative_guard'},
    'error-curve': {'K', 'gammas', 'strategy', 'epsilon', 'step', 'shifts',
                    'delta_range', 'points'},
    'scaling': {'n_range', 'k_grid', 'target', 'points', 'x_range', 'ratio',
                'jitter', 'initial_state'},
    'variance-opt': {'generator', 'K', 'step_a', 'bounds', 'shots', 'x',
                     'monte_carlo', 'trials', 'initial_state'},
    'vqe': {'n_qubits', 'ansatz', 'methods', 'iterations', 'runs',
            'learning_rate', 'layers', 'shots'},
    'gaps': {'generator', 'bins'},
}


def validate_positive(value: Any, name: str = "value") -> float:
    """
    Validate a strictly positive finite real

    Args:
        value: Number to check
        name: Parameter name used in error messages

    Returns:
        float: The value as a float

    Raises:
        ValidationError: If the value is not a positive finite number
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}")

    if not math.isfinite(number) or number <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {number}")

    return number


def validate_count(value: Any, name: str = "count", minimum: int = 1,
                   maximum: Optional[int] = None) -> int:
    """
    Validate an integer count within [minimum, maximum]

    Raises:
        ValidationError: If the value is not an integer in range
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ValidationError(f"{name} must be an integer, got {value!r}")

    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} must be at least {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValidationError(f"{name} must be at most {maximum}, got {value}")

    return value


def validate_shot_count(value: Any) -> Optional[int]:
    """
    Validate a shot count; None, 0 or "inf" mean exact expectation values

    Returns:
        Optional[int]: None for infinite shots, otherwise a count >= 1
    """
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in ('inf', 'infinite', 'exact'):
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    if value == 0:
        return None
    return validate_count(value, 'n_shots', minimum=1)


def validate_strictly_ascending(values: Iterable[float], name: str = "values",
                                allow_empty: bool = False) -> np.ndarray:
    """
    Validate a finite, strictly ascending list of reals

    Returns:
        np.ndarray: The values as a float array
    """
    try:
        array = np.asarray(list(values), dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a list of numbers")

    if array.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if array.size == 0 and not allow_empty:
        raise ValidationError(f"{name} cannot be empty")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"{name} must be finite")
    if array.size > 1 and np.any(np.diff(array) <= 0):
        raise ValidationError(f"{name} must be strictly ascending and pairwise distinct, got {array.tolist()}")

    return array


def validate_gap_set(gaps: Iterable[float], name: str = "gaps") -> np.ndarray:
    """
    Validate gaps (true or pseudo): positive, ascending, no duplicates, no zero

    Raises:
        ValidationError: If a zero or repeated gap would make the shift matrix singular
    """
    array = validate_strictly_ascending(gaps, name)
    if array[0] <= 0:
        raise ValidationError(f"{name} must be strictly positive (a zero gap makes the shift matrix singular)")
    logger.debug(f"Validated {name}: {array.tolist()}")
    return array


def validate_shift_set(shifts: Iterable[float], expected_length: Optional[int] = None,
                       name: str = "shifts") -> np.ndarray:
    """
    Validate parameter shifts: positive, strictly ascending, optional length check
    """
    array = validate_strictly_ascending(shifts, name)
    if array[0] <= 0:
        raise ValidationError(f"{name} must be strictly positive, got {array.tolist()}")
    if expected_length is not None and array.size != expected_length:
        raise ValidationError(f"Expected {expected_length} {name}, got {array.size}")
    return array


def validate_interval(interval: Sequence[float], name: str = "interval",
                      positive: bool = False) -> Tuple[float, float]:
    """
    Validate a closed interval [low, high] with low < high

    Returns:
        Tuple[float, float]: The interval bounds
    """
    if interval is None or len(interval) != 2:
        raise ValidationError(f"{name} must have exactly two bounds")

    low, high = (float(v) for v in interval)
    if not (math.isfinite(low) and math.isfinite(high)):
        raise ValidationError(f"{name} bounds must be finite")
    if low >= high:
        raise ValidationError(f"{name} must satisfy low < high, got [{low}, {high}]")
    if positive and low <= 0:
        raise ValidationError(f"{name} must lie in (0, inf), got [{low}, {high}]")

    return low, high


def validate_symmetric_interactions(matrix: Any, n_qubits: int, tolerance: float = 1e-12) -> np.ndarray:
    """
    Validate an interaction matrix J: real, n x n, symmetric, zero diagonal
    """
    try:
        j_matrix = np.asarray(matrix, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("Interaction matrix must contain real numbers")

    if j_matrix.shape != (n_qubits, n_qubits):
        raise ValidationError(f"Interaction matrix must be {n_qubits}x{n_qubits}, got shape {j_matrix.shape}")
    if not np.allclose(j_matrix, j_matrix.T, atol=tolerance, rtol=0.0):
        raise ValidationError("Interaction matrix must be symmetric")
    if np.any(np.abs(np.diag(j_matrix)) > tolerance):
        raise ValidationError("Interaction matrix must have a zero diagonal")

    return j_matrix


def validate_qubit_range(n_qubits: Any, minimum: int = 1, maximum: int = 10) -> int:
    """Validate a qubit count for dense statevector work"""
    return validate_count(n_qubits, 'n_qubits', minimum=minimum, maximum=maximum)


def validate_run_config(command: str, run_config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Validate a CLI run configuration against the keys known for a subcommand

    Args:
        command: Subcommand name
        run_config: Mapping loaded from the run file plus flag overrides

    Returns:
        Dict[str, Any]: The validated mapping

    Raises:
        ValidationError: On unknown commands, unknown keys or bad common values
    """
    if command not in RUN_CONFIG_KEYS:
        raise ValidationError(f"Unknown command: {command}")
    if run_config is None:
        return {}
    if not isinstance(run_config, dict):
        raise ValidationError("Run configuration must be a mapping")

    allowed = RUN_CONFIG_KEYS[command] | COMMON_RUN_KEYS
    unknown = sorted(set(run_config) - allowed)
    if unknown:
        raise ValidationError(f"Unknown keys for '{command}': {unknown}. Allowed: {sorted(allowed)}")

    if 'seed' in run_config:
        validate_count(run_config['seed'], 'seed', minimum=0)
    if 'threads' in run_config:
        validate_count(run_config['threads'], 'threads', minimum=1, maximum=256)
    if 'points' in run_config:
        validate_count(run_config['points'], 'points', minimum=2)
    if 'K' in run_config:
        validate_count(run_config['K'], 'K', minimum=1)
    if 'shots' in run_config:
        validate_shot_count(run_config['shots'])

    logger.debug(f"Validated run configuration for '{command}'")
    return run_config
