"""
Artifact formatting for kv-string-lab.

Every output file goes through this module so that runs are reproducible:
CSV files use ``\\n`` line endings and shortest round-trip float text, JSON is
UTF-8 with sorted keys, and every file is written to a temporary sibling and
renamed on success so a failed run never leaves a partial artifact.
"""

import json
import logging
import math
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence, TextIO, Union

import numpy as np

from src.middleware.error_handler import ArtifactIOError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_float(value: Any) -> str:
    """Shortest text that round-trips to the same double."""
    if value is None:
        return ""
    number = float(value)
    if math.isnan(number):
        return "nan"
    return repr(number)


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)) or value is None:
        return format_float(value)
    return str(value)


@contextmanager
def atomic_writer(path: PathLike) -> Iterator[TextIO]:
    """
    Open a temporary file next to ``path`` and move it into place on success.

    Raises:
        ArtifactIOError: If the directory cannot be created or the file written
    """
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp",
                                        dir=str(target.parent))
    except OSError as e:
        raise ArtifactIOError(str(target), e.strerror or str(e)) from e

    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            yield handle
        os.replace(tmp_name, target)
    except OSError as e:
        _discard(tmp_name)
        raise ArtifactIOError(str(target), e.strerror or str(e)) from e
    except BaseException:
        _discard(tmp_name)
        raise
    logger.debug(f"Wrote {target}")


def _discard(tmp_name: str) -> None:
    try:
        os.unlink(tmp_name)
    except FileNotFoundError:
        pass


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV artifact with a header line and one row per record."""
    with atomic_writer(path) as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_format_cell(cell) for cell in row) + "\n")
    return Path(path)


def _to_builtin(value: Any) -> Any:
    """Convert numpy scalars and containers into JSON-serializable values."""
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_builtin(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def serialize_json(payload: Any, pretty: bool = True) -> str:
    """Serialize with sorted keys; pretty output is indented by two spaces."""
    data = _to_builtin(payload)
    if pretty:
        return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return json.dumps(data, separators=(",", ":"), sort_keys=True, ensure_ascii=False)


def write_json(path: PathLike, payload: Any) -> Path:
    """Write a JSON artifact (UTF-8, keys sorted lexicographically)."""
    with atomic_writer(path) as handle:
        handle.write(serialize_json(payload))
    return Path(path)


def write_text(path: PathLike, text: str) -> Path:
    """Write a plain-text artifact, ensuring a trailing newline."""
    with atomic_writer(path) as handle:
        handle.write(text if text.endswith("\n") else text + "\n")
    return Path(path)


def format_report(name: str, passed: bool, detail: Optional[str] = None) -> str:
    """One ``PASS|FAIL name: detail`` line of the verification report."""
    status = "PASS" if passed else "FAIL"
    return f"{status} {name}" + (f": {detail}" if detail else "")
