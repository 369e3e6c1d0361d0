# Shared utility functions
# src/utils/utils.py

import json
import logging
from pathlib import Path

import numpy as np

DEFAULT_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(level='INFO', fmt=DEFAULT_LOG_FORMAT):
    """
    Configure the root logger once for command-line use.

    Parameters:
    -----------
    level : str or int
        Logging level name ('DEBUG', 'INFO', ...) or numeric level
    fmt : str
        Log record format
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=level, format=fmt)
    root.setLevel(level)


def banner(title, width=60):
    """Multi-line section banner used in summaries."""
    return f"\n{'=' * width}\n{title}\n{'=' * width}"


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        # JSON has no NaN/inf literal
        return None
    return obj


def write_json(data, output_path):
    """
    Write a dict as pretty, key-sorted UTF-8 JSON with a trailing newline.

    Parameters:
    -----------
    data : dict
        Content to serialize
    output_path : str or Path
        Destination file; parent directories are created

    Returns:
    --------
    Path of the written file
    """
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(data), indent=2, sort_keys=True) + '\n'
    output_path.write_text(text, encoding='utf-8')
    return output_path


def read_json(path):
    """Read a UTF-8 JSON document."""
    return json.loads(Path(path).read_text(encoding='utf-8'))
