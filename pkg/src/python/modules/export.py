"""
CSV / JSON artifact writing and run manifests
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from config import TOOL_VERSION
from logging_config import ExportError

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = "1"
# Round-trip precision for doubles
FLOAT_FORMAT = '%.17g'
MANIFEST_NAME = 'manifest.json'


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    if hasattr(value, 'value'):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _json_safe(value):
    """Replace non-finite floats with strings so the output stays strict JSON"""
    if isinstance(value, float) and not math.isfinite(value):
        return 'inf' if value > 0 else ('-inf' if value < 0 else 'nan')
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def to_json_text(data: Any) -> str:
    normalised = json.loads(json.dumps(data, default=_json_default))
    return json.dumps(_json_safe(normalised), sort_keys=True, indent=2) + '\n'


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write an RFC-4180 CSV with full float precision and LF line endings"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as e:
        logger.error(f"Failed to write {path}: {str(e)}", exc_info=True)
        raise ExportError(f"Cannot write CSV {path}: {str(e)}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_json_text(data), encoding='utf-8')
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"Failed to write {path}: {str(e)}", exc_info=True)
        raise ExportError(f"Cannot write JSON {path}: {str(e)}") from e
    logger.debug(f"Wrote {path}")
    return path


@dataclass
class RunManifest:
    """Everything needed to reproduce and audit one CLI run"""
    command: str
    config: Dict[str, Any]
    seed: int
    environment: str
    tool_version: str = TOOL_VERSION
    csv_schema_version: str = CSV_SCHEMA_VERSION
    outputs: List[str] = field(default_factory=list)
    wall_time_seconds: float = 0.0
    performance: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    created_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))

    def add_output(self, path: Union[str, Path]):
        self.outputs.append(Path(path).name)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def write_manifest(manifest: RunManifest, out_dir: Union[str, Path]) -> Path:
    return write_json(manifest.to_dict(), Path(out_dir) / MANIFEST_NAME)


# DataFrame builders

def scan_frame(xs: Sequence[float], exact: Sequence[float], columns: Mapping[str, Sequence[float]]) -> pd.DataFrame:
    """`x, exact, <method>...` in insertion order"""
    data = {'x': np.asarray(xs, dtype=float), 'exact': np.asarray(exact, dtype=float)}
    for label, values in columns.items():
        data[label] = np.asarray(values, dtype=float)
    return pd.DataFrame(data)


def scaling_frame(rows: Sequence[Mapping[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows))
    if not frame.empty:
        frame = frame.sort_values(['n_qubits', 'K']).reset_index(drop=True)
    return frame


def traces_frame(traces) -> pd.DataFrame:
    """All VQE traces stacked with `method,run` key columns"""
    frames = []
    for trace in traces:
        frame = trace.to_frame()
        frame.insert(0, 'run', trace.run_index)
        frame.insert(0, 'method', trace.method)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=['method', 'run', 'iteration', 'energy', 'cumulative_calls'])
    return pd.concat(frames, ignore_index=True)
