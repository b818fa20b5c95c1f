"""
Report Service for writing experiment outputs.

All files are written atomically: the content goes to a temporary file in
the destination directory which is then renamed over the target.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` via a temporary file and rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except Exception as e:
        logger.error(f"Error writing {path}: {e}")
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Binary counterpart of ``atomic_write_text``"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except Exception as e:
        logger.error(f"Error writing {path}: {e}")
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a data frame as CSV without the index"""
    path = atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_jsonl(records: Iterable[Dict[str, Any]], path: PathLike) -> Path:
    """Write one JSON object per line, keys in insertion order"""
    lines = [json.dumps(record) for record in records]
    text = "\n".join(lines) + ("\n" if lines else "")
    path = atomic_write_text(path, text)
    logger.info(f"Wrote {len(lines)} records to {path}")
    return path


def write_json(record: Dict[str, Any], path: PathLike) -> Path:
    """Write a single indented JSON document"""
    path = atomic_write_text(path, json.dumps(record, indent=2) + "\n")
    logger.info(f"Wrote {path}")
    return path
