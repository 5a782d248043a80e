"""Core vector types, validated embedding I/O, and elementary similarity ops.

Embedding containers come in two interchangeable on-disk forms:

* EMB1 binary (little-endian): 4-byte magic ``EMB1``, uint16 version (=1),
  uint32 dim, uint32 count, then ``count * dim`` float32 values row-major.
  An optional sidecar ``<stem>.manifest.json`` carries row ids and free-form
  string metadata; without it, ids default to ``row-0000`` style.
* JSON fixture: ``{"dim": int, "vectors": [[...], ...], "ids": [...]?}``.

Payload values are 32-bit floats; everything in memory is 64-bit. Saving a
set whose values are not exactly float32-representable is a documented lossy
narrowing step.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import FormatError, TruncationError, ValidationError, ZeroNormWarning

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1
_HEADER = struct.Struct("<4sHII")  # magic, version, dim, count


def _readonly_f64(values: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-D vector, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """A d-dimensional real feature vector; immutable after construction."""

    values: np.ndarray

    def __post_init__(self):
        arr = _readonly_f64(self.values)
        if arr.size < 1:
            raise ValidationError("feature vector must have dim >= 1")
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise ValidationError(f"non-finite value at index {bad[0]}")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"FeatureVector(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class MaskVector:
    """A {0,1}-valued vector; 0 marks an element discarded by masking."""

    bits: np.ndarray

    def __post_init__(self):
        arr = _readonly_f64(self.bits)
        if arr.size < 1:
            raise ValidationError("mask vector must have dim >= 1")
        if not np.all((arr == 0.0) | (arr == 1.0)):
            raise ValidationError("mask entries must be exactly 0 or 1")
        object.__setattr__(self, "bits", arr)

    @property
    def dim(self) -> int:
        return int(self.bits.size)

    @property
    def masked_count(self) -> int:
        """Number of discarded (zero) entries."""
        return int(np.count_nonzero(self.bits == 0.0))

    def masked_indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.bits == 0.0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MaskVector):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __repr__(self) -> str:
        return f"MaskVector(dim={self.dim}, masked={self.masked_count})"


def default_ids(count: int) -> tuple[str, ...]:
    return tuple(f"row-{i:04d}" for i in range(count))


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """A named, labeled collection of equal-dimension feature vectors."""

    dim: int
    rows: tuple[tuple[str, FeatureVector], ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        rows = tuple((str(rid), vec) for rid, vec in self.rows)
        if self.dim < 1:
            raise ValidationError("embedding set dim must be >= 1")
        seen: set[str] = set()
        for rid, vec in rows:
            if vec.dim != self.dim:
                raise ValidationError(
                    f"row {rid!r} has dim {vec.dim}, set dim is {self.dim}"
                )
            if rid in seen:
                raise ValidationError(f"duplicate row id {rid!r}")
            seen.add(rid)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "metadata", dict(self.metadata or {}))

    @classmethod
    def from_matrix(
        cls,
        matrix: np.ndarray | Sequence[Sequence[float]],
        ids: Sequence[str] | None = None,
        metadata: Mapping[str, str] | None = None,
    ) -> "EmbeddingSet":
        mat = np.asarray(matrix, dtype=np.float64)
        if mat.ndim != 2:
            raise ValidationError(f"expected a 2-D matrix, got shape {mat.shape}")
        n, dim = mat.shape
        row_ids = default_ids(n) if ids is None else tuple(str(s) for s in ids)
        if len(row_ids) != n:
            raise ValidationError(f"{len(row_ids)} ids for {n} rows")
        rows = tuple(zip(row_ids, (FeatureVector(r) for r in mat)))
        return cls(dim, rows, metadata or {})

    @property
    def count(self) -> int:
        return len(self.rows)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(rid for rid, _ in self.rows)

    def vectors(self) -> tuple[FeatureVector, ...]:
        return tuple(vec for _, vec in self.rows)

    def matrix(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([vec.values for _, vec in self.rows])

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[tuple[str, FeatureVector]]:
        return iter(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.rows == other.rows
            and dict(self.metadata) == dict(other.metadata)
        )

    def __repr__(self) -> str:
        return f"EmbeddingSet(dim={self.dim}, count={self.count})"


def manifest_path(path: str | Path) -> Path:
    """Sidecar manifest location for an embedding file: ``<stem>.manifest.json``."""
    path = Path(path)
    if path.suffix:
        return path.with_suffix(".manifest.json")
    return path.with_name(path.name + ".manifest.json")


def _validate_matrix_finite(mat: np.ndarray, source: str) -> None:
    bad = np.argwhere(~np.isfinite(mat))
    if bad.size:
        row, idx = int(bad[0][0]), int(bad[0][1])
        raise ValidationError(
            f"{source}: non-finite value at row {row}, index {idx}"
        )


def _load_emb1(path: Path, raw: bytes) -> EmbeddingSet:
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file too short for an EMB1 header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != EMB1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != EMB1_VERSION:
        raise FormatError(f"{path}: unsupported EMB1 version {version}")
    if dim < 1:
        raise FormatError(f"{path}: dim must be >= 1, got {dim}")
    payload = raw[_HEADER.size :]
    expected = count * dim * 4
    if len(payload) != expected:
        raise TruncationError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}"
        )
    mat = (
        np.frombuffer(payload, dtype="<f4")
        .reshape(count, dim)
        .astype(np.float64)
    )
    _validate_matrix_finite(mat, str(path))

    ids: Sequence[str] | None = None
    metadata: Mapping[str, str] = {}
    side = manifest_path(path)
    if side.exists():
        try:
            doc = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{side}: invalid manifest JSON: {exc}") from exc
        ids = doc.get("ids")
        if ids is not None:
            if len(ids) != count:
                raise ValidationError(
                    f"{side}: manifest has {len(ids)} ids for {count} rows"
                )
            ids = [str(s) for s in ids]
        metadata = {str(k): str(v) for k, v in doc.get("metadata", {}).items()}
    return EmbeddingSet.from_matrix(mat, ids=ids, metadata=metadata)


def _load_json_fixture(path: Path, raw: bytes) -> EmbeddingSet:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: neither EMB1 binary nor fixture JSON") from exc
    if not isinstance(doc, dict) or "dim" not in doc or "vectors" not in doc:
        raise FormatError(f"{path}: fixture JSON needs 'dim' and 'vectors' keys")
    dim = int(doc["dim"])
    vectors = doc["vectors"]
    for i, row in enumerate(vectors):
        if len(row) != dim:
            raise ValidationError(
                f"{path}: row {i} has {len(row)} values, dim is {dim}"
            )
    mat = np.asarray(vectors, dtype=np.float64).reshape(len(vectors), dim)
    _validate_matrix_finite(mat, str(path))
    ids = doc.get("ids")
    if ids is not None and len(ids) != len(vectors):
        raise ValidationError(f"{path}: {len(ids)} ids for {len(vectors)} rows")
    return EmbeddingSet.from_matrix(mat, ids=ids)


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Load an embedding set from an EMB1 binary or a JSON fixture file.

    Binary values are read bit-exactly as float32 and widened to float64;
    JSON numbers are parsed as float64.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == EMB1_MAGIC:
        return _load_emb1(path, raw)
    return _load_json_fixture(path, raw)


def save_embeddings(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Write an EMB1 file (plus a sidecar manifest when ids/metadata are non-default).

    Values are narrowed to float32; narrowing that overflows to inf is rejected
    rather than silently written.
    """
    path = Path(path)
    mat = embeddings.matrix()
    with np.errstate(over="ignore"):  # overflow rejected explicitly below
        narrow = mat.astype("<f4")
    if mat.size and not np.all(np.isfinite(narrow)):
        row, idx = (int(v) for v in np.argwhere(~np.isfinite(narrow))[0])
        raise ValidationError(
            f"value at row {row}, index {idx} overflows float32 on save"
        )
    header = _HEADER.pack(
        EMB1_MAGIC, EMB1_VERSION, embeddings.dim, embeddings.count
    )
    path.write_bytes(header + narrow.tobytes(order="C"))

    needs_manifest = bool(embeddings.metadata) or embeddings.ids != default_ids(
        embeddings.count
    )
    side = manifest_path(path)
    if needs_manifest:
        doc = {"ids": list(embeddings.ids), "metadata": dict(embeddings.metadata)}
        side.write_text(json.dumps(doc, indent=2) + "\n")
    elif side.exists():
        side.unlink()  # a stale manifest would mislabel the new payload


def l2_normalize(v: FeatureVector) -> FeatureVector:
    """Scale ``v`` to unit Euclidean norm.

    A zero vector is returned unchanged and flagged with :class:`ZeroNormWarning`.
    """
    norm = float(np.linalg.norm(v.values))
    if norm == 0.0:
        warnings.warn("cannot normalize a zero vector", ZeroNormWarning)
        return v
    return FeatureVector(v.values / norm)


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Either argument having zero norm yields 0 by convention, so batch
    evaluation never aborts on a degenerate embedding.
    """
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        return 0.0
    cos = float(np.dot(a.values, b.values)) / (na * nb)
    return max(-1.0, min(1.0, cos))


def dot(a: FeatureVector, b: FeatureVector) -> float:
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return math.fsum(a.values * b.values)
