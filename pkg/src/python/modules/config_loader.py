"""
Environment-based configuration loader for the aGPSR toolkit

`config/environments.yaml` carries one section per environment
(development, ci, production) and a `global` section that every
environment section is deep-merged over. AGPSR_* environment variables
override the merged result.
"""
import os
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from logging_config import ConfigurationError

try:
    import yaml
except ImportError:
    raise ImportError("PyYAML is required for configuration. Install with: pip install PyYAML")

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[3]
DEFAULT_ENVIRONMENT = 'development'
REQUIRED_SECTIONS = ['numerics', 'shift_rules', 'experiments', 'vqe', 'logging']


def _as_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")


# variable -> (section path, converter); an empty AGPSR_LOG_FILE disables the file handler
ENV_OVERRIDES: Dict[str, Tuple[Tuple[str, ...], Callable[[str, str], Any]]] = {
    'AGPSR_LOG_LEVEL': (('logging', 'level'), lambda name, raw: raw.upper()),
    'AGPSR_LOG_FILE': (('logging', 'file'), lambda name, raw: raw or None),
    'AGPSR_THREADS': (('runtime', 'threads'), _as_int),
    'AGPSR_SEED': (('seed',), _as_int),
}


def config_search_paths() -> List[Path]:
    """CONFIG_FILE first, then config/environments.yaml|yml under the project root"""
    paths = [PROJECT_ROOT / 'config' / 'environments.yaml', PROJECT_ROOT / 'config' / 'environments.yml']
    custom = os.getenv('CONFIG_FILE')
    if custom:
        paths.insert(0, Path(custom))
    return paths


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(merged.get(key), dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigLoader:
    """Loads and validates the configuration of one environment"""

    def __init__(self):
        self.config: Dict[str, Any] = {}
        self.environment: str = ""
        self.source: Optional[Path] = None

    def load_config(self, environment: Optional[str] = None) -> Dict[str, Any]:
        """
        Load configuration for an environment

        Args:
            environment: development, ci or production. Defaults to the
                ENVIRONMENT variable, then 'development'.

        Raises:
            ConfigurationError: file missing or unreadable, unknown environment,
                bad override value or failed validation
        """
        environment = (environment or os.getenv('ENVIRONMENT', DEFAULT_ENVIRONMENT)).lower()
        self.environment = environment

        data = self._read_file()
        environments = data.get('environments')
        if not isinstance(environments, dict):
            raise ConfigurationError("Configuration file must contain 'environments' section")
        if environment not in environments:
            raise ConfigurationError(
                f"Environment '{environment}' not found in configuration. "
                f"Available environments: {list(environments)}"
            )

        config = deep_merge(data.get('global') or {}, environments[environment] or {})
        self._apply_env_overrides(config)
        self._validate(config)

        self.config = config
        logger.debug(f"Loaded '{environment}' configuration from {self.source}")
        return config

    def _read_file(self) -> Dict[str, Any]:
        searched = config_search_paths()
        for path in searched:
            if not path.exists():
                continue
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    data = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                logger.error(f"Skipping unreadable config file {path}: {e}")
                continue
            self.source = path
            return data
        raise ConfigurationError(f"No valid YAML configuration file found. Searched: {[str(p) for p in searched]}")

    @staticmethod
    def _apply_env_overrides(config: Dict[str, Any]) -> None:
        for name, (keys, convert) in ENV_OVERRIDES.items():
            raw = os.getenv(name)
            # AGPSR_LOG_FILE is honoured when set to ''; the others only when non-empty
            if raw is None or (raw == '' and name != 'AGPSR_LOG_FILE'):
                continue
            section = config
            for key in keys[:-1]:
                section = section.setdefault(key, {})
            section[keys[-1]] = convert(name, raw)
            logger.debug(f"{name} overrides {'.'.join(keys)}")

    @staticmethod
    def _validate(config: Dict[str, Any]) -> None:
        missing = [s for s in REQUIRED_SECTIONS if s not in config]
        if missing:
            raise ConfigurationError(f"Required configuration section(s) not found: {missing}")

        for key, value in (config['numerics'] or {}).items():
            if key.endswith('_tolerance') and (not isinstance(value, (int, float)) or not 0 < value < 1):
                raise ConfigurationError(f"numerics.{key} must be in (0, 1), got {value}")

        # PyYAML reads exponents without a sign (1.0e12) as strings
        conditions = [('numerics', 'condition_limit')]
        conditions += [('shift_rules', key) for key in (config['shift_rules'] or {}) if key.endswith('_condition_target')]
        for section, key in conditions:
            value = (config[section] or {}).get(key)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigurationError(f"{section}.{key} must be a positive number, got {value!r}")

        threads = config.get('runtime', {}).get('threads', 1)
        if not isinstance(threads, int) or not 1 <= threads <= 256:
            raise ConfigurationError(f"runtime.threads must be between 1 and 256, got {threads}")

        seed = config.get('seed', 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigurationError(f"seed must be a non-negative integer, got {seed}")


# Global configuration instance
_config_loader: Optional[ConfigLoader] = None


def get_config(environment: Optional[str] = None) -> Dict[str, Any]:
    """Cached configuration; the first call decides the environment"""
    if _config_loader is None:
        return reload_config(environment)
    return _config_loader.config


def reload_config(environment: Optional[str] = None) -> Dict[str, Any]:
    global _config_loader

    loader = ConfigLoader()
    loader.load_config(environment)
    _config_loader = loader
    return loader.config


def get_environment() -> str:
    if _config_loader:
        return _config_loader.environment
    return os.getenv('ENVIRONMENT', DEFAULT_ENVIRONMENT).lower()
