"""Flat CSV files: optional ``# key=value`` comment lines, one header row, data rows.

All floats are written with ``%.17g`` so that a round trip is exact.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

FLOAT_FMT = "%.17g"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % float(value)
    return str(value)


def write_table(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    comments: Mapping[str, object] | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={fmt(v)}" for k, v in (comments or {}).items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    # newline="" keeps LF endings on every platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_array(path, header, data: np.ndarray, comments=None) -> Path:
    data = np.asarray(data, dtype=float)
    return write_table(path, header, data.tolist(), comments)


def read_table(path: str | Path) -> tuple[list[str], np.ndarray, dict[str, str]]:
    """Return ``(header, data, comments)``; data is a float array of shape (rows, cols)."""
    comments: dict[str, str] = {}
    header: list[str] | None = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                comments[key.strip()] = value.strip()
                continue
            if header is None:
                header = [h.strip() for h in line.split(",")]
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data, comments


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
