"""Writer/reader for the EMB1 embedding container.

This mirrors the consuming toolkit's on-disk contract and is implemented
against the format description alone, so this package stays decoupled from
the consumer's internals: 14-byte header (magic "EMB1", uint16 version 1,
uint32 dim, uint32 count, all little-endian) followed by count*dim float32
values row-major, plus an optional ``<stem>.manifest.json`` sidecar with row
ids and string metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    if path.suffix:
        return path.with_suffix(".manifest.json")
    return path.with_name(path.name + ".manifest.json")


def write_emb1(
    path: str | Path,
    matrix: np.ndarray,
    ids: Sequence[str],
    metadata: Mapping[str, str] | None = None,
) -> None:
    path = Path(path)
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    count, dim = mat.shape
    if len(ids) != count:
        raise ValueError(f"{len(ids)} ids for {count} rows")
    path.write_bytes(_HEADER.pack(MAGIC, VERSION, dim, count) + mat.tobytes())
    manifest_path(path).write_text(
        json.dumps(
            {"ids": list(ids), "metadata": dict(metadata or {})}, indent=2
        )
        + "\n"
    )


def read_emb1(path: str | Path) -> tuple[np.ndarray, list[str], dict[str, str]]:
    """Self-check reader; returns (float32 matrix, ids, metadata)."""
    raw = Path(path).read_bytes()
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{path}: not an EMB1 v1 file")
    payload = raw[_HEADER.size :]
    if len(payload) != count * dim * 4:
        raise ValueError(f"{path}: truncated payload")
    mat = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    ids = [f"row-{i:04d}" for i in range(count)]
    metadata: dict[str, str] = {}
    side = manifest_path(path)
    if side.exists():
        doc = json.loads(side.read_text())
        ids = [str(s) for s in doc.get("ids", ids)]
        metadata = {str(k): str(v) for k, v in doc.get("metadata", {}).items()}
    return mat, ids, metadata
