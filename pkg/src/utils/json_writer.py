"""
JSON and JSON-lines writers for metrics and report side files.
"""

import json
from typing import Any, Iterable, Mapping, Optional, Union
from pathlib import Path
import logging

import numpy as np

from src.errors import UsageError

logger = logging.getLogger(__name__)


def _default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _prepare(filepath: Union[str, Path], overwrite: bool) -> Path:
    output_path = Path(filepath)
    if output_path.exists() and not overwrite:
        raise UsageError(f"{output_path} exists; pass --overwrite to replace it")
    output_path.parent.mkdir(parents=True, exist_ok=True)
    return output_path


def save_json(
    data: Any,
    filepath: Union[str, Path],
    indent: Optional[int] = 2,
    overwrite: bool = False,
) -> Path:
    """
    Save a JSON document with sorted keys.

    Args:
        data: JSON-serializable value (numpy scalars and arrays allowed)
        filepath: Output file path
        indent: JSON indentation (None for compact)
        overwrite: Replace an existing file

    Raises:
        UsageError: If the file exists and ``overwrite`` is False
    """
    output_path = _prepare(filepath, overwrite)
    try:
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=indent, sort_keys=True, default=_default)
            f.write("\n")
        logger.info(f"Saved JSON: {output_path}")
    except Exception as e:
        logger.error(f"Failed to save JSON to {output_path}: {e}")
        raise
    return output_path


def write_jsonl(
    records: Iterable[Mapping[str, Any]],
    filepath: Union[str, Path],
    overwrite: bool = False,
) -> Path:
    """Write one compact JSON object per line."""
    output_path = _prepare(filepath, overwrite)
    count = 0
    with open(output_path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, separators=(",", ":"), default=_default))
            f.write("\n")
            count += 1
    logger.info(f"Saved {count} JSON-lines record(s): {output_path}")
    return output_path


def append_jsonl(record: Mapping[str, Any], filepath: Union[str, Path]) -> None:
    """Append one record to a JSON-lines file (created when missing)."""
    output_path = Path(filepath)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True, separators=(",", ":"), default=_default))
        f.write("\n")


def load_json(filepath: Union[str, Path]) -> Any:
    """
    Load a JSON file.

    Raises:
        FileNotFoundError: If file doesn't exist
        ValueError: If the content is not valid JSON
    """
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        logger.error(f"JSON file not found: {filepath}")
        raise
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {filepath}: {e}")
        raise ValueError(f"Invalid JSON file: {filepath}") from e


def load_jsonl(filepath: Union[str, Path]) -> list:
    """Records of a JSON-lines file."""
    with open(filepath, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
