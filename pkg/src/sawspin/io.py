"""CSV and metadata persistence. Writes are atomic (write-then-rename)."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np


def write_csv_atomic(path, meta_lines: list[str], columns: list[tuple[str, np.ndarray]]):
    """Write '#'-prefixed metadata lines, a header row, and full-precision data.

    The file appears atomically: a partial run never leaves a truncated CSV.
    """
    path = Path(path)
    if not columns:
        raise ValueError("need at least one column")
    length = len(columns[0][1])
    for name, col in columns:
        if len(col) != length:
            raise ValueError(f"column {name!r} has mismatched length")
    lines = [f"# {line}" for line in meta_lines]
    lines.append(",".join(name for name, _ in columns))
    data = np.column_stack([np.asarray(col, dtype=float) for _, col in columns])
    for row in data:
        lines.append(",".join(f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"

    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def read_csv(path):
    """Read a CSV written by write_csv_atomic: (meta lines, column dict)."""
    path = Path(path)
    meta = []
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                meta.append(line[1:].strip())
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            elif line.strip():
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row found")
    data = np.asarray(rows, dtype=float)
    columns = {name: data[:, i] if len(rows) else np.array([])
               for i, name in enumerate(header)}
    return meta, columns


def sidecar_path(csv_path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.txt")


def write_sidecar(csv_path, resolved_config_text: str, extra: dict):
    """Structured-text sidecar: resolved configuration plus run provenance."""
    lines = [f"{key} = {value}" for key, value in extra.items()]
    text = "\n".join(lines) + "\n\n[resolved config]\n" + resolved_config_text
    target = sidecar_path(csv_path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target
