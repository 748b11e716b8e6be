"""
Configuration settings for the aGPSR toolkit
Loads from the environment-specific YAML configuration file
"""
import logging
from dataclasses import dataclass

from config_loader import get_config, get_environment
from logging_config import ConfigurationError, setup_logging

TOOL_VERSION = "1.0.0"

# Load environment-specific configuration
config = get_config()

# Initialize logging with environment-specific settings
LOG_LEVEL = config.get('logging', {}).get('level', 'INFO')
LOG_FILE = config.get('logging', {}).get('file')
setup_logging(LOG_LEVEL, LOG_FILE)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances shared by the linear-algebra layer"""
    hermitian_tolerance: float = 1e-12
    reconstruction_tolerance: float = 1e-10
    pivot_tolerance: float = 1e-13
    gap_tolerance: float = 1e-9
    condition_limit: float = 1e12


numerics_config = config.get('numerics', {})
NUMERICS = NumericsConfig(
    hermitian_tolerance=float(numerics_config.get('hermitian_tolerance', 1e-12)),
    reconstruction_tolerance=float(numerics_config.get('reconstruction_tolerance', 1e-10)),
    pivot_tolerance=float(numerics_config.get('pivot_tolerance', 1e-13)),
    gap_tolerance=float(numerics_config.get('gap_tolerance', 1e-9)),
    condition_limit=float(numerics_config.get('condition_limit', 1e12)),
)

if NUMERICS.condition_limit <= 1:
    raise ConfigurationError(f"condition_limit must exceed 1, got {NUMERICS.condition_limit}")

# Shift-rule defaults
shift_config = config.get('shift_rules', {})
SHIFT_INTERVAL_PI = tuple(float(v) for v in shift_config.get('shift_interval_pi', [0.25, 0.5]))
EPSILON_GAP = float(shift_config.get('epsilon', 0.1))
GPSR_CONDITION_TARGET = float(shift_config.get('gpsr_condition_target', 1e4))
AGPSR_CONDITION_TARGET = float(shift_config.get('agpsr_condition_target', 1e9))
WIDENING_FACTOR = float(shift_config.get('widening_factor', 1.25))
WIDENING_MAX_STEPS = int(shift_config.get('widening_max_steps', 100))
PSR_GAP = float(shift_config.get('psr_gap', 2.0))
PSR_SHIFT = float(shift_config.get('psr_shift', 1.5707963267948966))

if len(SHIFT_INTERVAL_PI) != 2 or not 0 < SHIFT_INTERVAL_PI[0] < SHIFT_INTERVAL_PI[1]:
    raise ConfigurationError(f"shift_interval_pi must be an increasing positive pair, got {SHIFT_INTERVAL_PI}")

if WIDENING_FACTOR <= 1:
    raise ConfigurationError(f"widening_factor must exceed 1, got {WIDENING_FACTOR}")

# Experiment defaults
experiments_config = config.get('experiments', {})
OMEGA = float(experiments_config.get('omega', 1.0))
WEAK_RATIO = float(experiments_config.get('weak_ratio', 0.5))
STRONG_RATIO = float(experiments_config.get('strong_ratio', 2.0))
SCALING_RATIO = float(experiments_config.get('scaling_ratio', 1.0))
LATTICE = tuple(int(v) for v in experiments_config.get('lattice', [2, 3]))
GENERIC_JITTER = float(experiments_config.get('generic_jitter', 0.05))
SCAN_POINTS = int(experiments_config.get('scan_points', 50))
SCAN_INTERVAL = tuple(float(v) for v in experiments_config.get('scan_interval', [0.0, 3.141592653589793]))
DERIVATIVE_GUARD = float(experiments_config.get('derivative_guard', 1e-6))
HISTOGRAM_BINS = int(experiments_config.get('histogram_bins', 40))
SCALING_K_GRID = tuple(int(v) for v in experiments_config.get('scaling_k_grid', [1, 2, 3, 4, 5]))
SCALING_TARGET = float(experiments_config.get('scaling_target', 0.002))
SWEEP_FACTORS = tuple(float(v) for v in experiments_config.get(
    'sweep_factors', [0.5, 0.625, 0.75, 0.875, 1.0, 1.125, 1.25, 1.5]))

if SCAN_POINTS < 2:
    raise ConfigurationError(f"scan_points must be at least 2, got {SCAN_POINTS}")

# Variance optimisation defaults
variance_config = config.get('variance', {})
SHIFT_LOWER_BOUND = float(variance_config.get('lower_bound', 0.01))
OPTIMIZER_XATOL = float(variance_config.get('xatol', 1e-10))
OPTIMIZER_FATOL = float(variance_config.get('fatol', 1e-14))
OPTIMIZER_MAX_ITERATIONS = int(variance_config.get('max_iterations', 4000))
MONTE_CARLO_TRIALS = int(variance_config.get('monte_carlo_trials', 2000))

# VQE defaults
vqe_config = config.get('vqe', {})
VQE_LEARNING_RATE = float(vqe_config.get('learning_rate', 0.01))
VQE_ITERATIONS = int(vqe_config.get('iterations', 100))
VQE_RUNS = int(vqe_config.get('runs', 10))
VQE_LAYERS = int(vqe_config.get('layers', 3))
ADAM_BETA1 = float(vqe_config.get('beta1', 0.9))
ADAM_BETA2 = float(vqe_config.get('beta2', 0.999))
ADAM_EPSILON = float(vqe_config.get('epsilon', 1e-8))
VQE_INIT_RANGE = (float(vqe_config.get('init_low', -3.141592653589793)),
                  float(vqe_config.get('init_high', 3.141592653589793)))

if VQE_LEARNING_RATE <= 0:
    raise ConfigurationError(f"vqe.learning_rate must be positive, got {VQE_LEARNING_RATE}")

# Runtime settings
runtime_config = config.get('runtime', {})
DEFAULT_THREADS = int(runtime_config.get('threads', 1))
DEFAULT_OUT_DIR = runtime_config.get('out_dir', 'results')
DEFAULT_SEED = int(config.get('seed', 1234))

environment = get_environment()
logger.debug(f"Configuration loaded for environment: {environment}")
logger.debug(f"Numerics: {NUMERICS}")
logger.debug(f"Threads: {DEFAULT_THREADS}, seed: {DEFAULT_SEED}")
