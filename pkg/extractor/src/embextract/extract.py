"""Extraction runs: encode inputs, normalize, and write EMB1 fixture files."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import UnidentifiedImageError

from .emb1 import write_emb1
from .encoders import get_encoder

log = logging.getLogger("embextract")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")

# default content phrase used when masking without explicit content knowledge
DEFAULT_CONTENT_PHRASE = "person, animal, plant, or object in the foreground"


@dataclass(frozen=True)
class ExtractionManifest:
    """What to encode and where the output goes."""

    encoder_name: str
    out_path: Path
    image_paths: tuple[Path, ...] = ()
    texts: tuple[str, ...] = ()
    normalize: bool = True
    strict: bool = False

    def __post_init__(self):
        if bool(self.image_paths) == bool(self.texts):
            raise ValueError("provide exactly one of image_paths or texts")
        for p in self.image_paths:
            if not Path(p).exists():
                raise FileNotFoundError(f"listed input does not exist: {p}")


def _unique_ids(raw: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for rid in raw:
        n = seen.get(rid, 0) + 1
        seen[rid] = n
        out.append(rid if n == 1 else f"{rid}~{n}")
    return out


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    zero = norms[:, 0] == 0.0
    if np.any(zero):
        warnings.warn(
            f"{int(zero.sum())} row(s) have zero norm and were left unnormalized"
        )
        norms[zero] = 1.0
    return matrix / norms


def extract_image_embeddings(manifest: ExtractionManifest) -> Path:
    """Encode images, one row per file, ids = file stems.

    Undecodable files are skipped with a warning unless ``strict`` is set.
    """
    from PIL import Image

    encoder = get_encoder(manifest.encoder_name)
    usable: list[Path] = []
    for path in manifest.image_paths:
        try:
            with Image.open(path) as img:
                img.verify()  # cheap decodability probe, no full decode
        except (UnidentifiedImageError, OSError) as exc:
            if manifest.strict:
                raise ValueError(f"cannot decode image {path}: {exc}") from exc
            log.warning("skipping undecodable image %s: %s", path, exc)
            continue
        usable.append(Path(path))
    if not usable:
        raise ValueError("no decodable images to encode")
    matrix = encoder.encode_images(usable)
    if manifest.normalize:
        matrix = _normalize_rows(matrix)
    write_emb1(
        manifest.out_path,
        matrix,
        ids=_unique_ids([p.stem for p in usable]),
        metadata={
            "encoder": encoder.name,
            "kind": "image",
            "normalize": str(manifest.normalize).lower(),
        },
    )
    log.info("wrote %d image rows (dim %d) to %s", len(usable), encoder.dim,
             manifest.out_path)
    return Path(manifest.out_path)


def extract_text_embeddings(manifest: ExtractionManifest) -> Path:
    """Encode phrases, one row per phrase, ids = the phrases themselves."""
    for i, phrase in enumerate(manifest.texts):
        if not phrase.strip():
            raise ValueError(f"phrase {i} is empty")
    encoder = get_encoder(manifest.encoder_name)
    matrix = encoder.encode_texts(list(manifest.texts))
    if manifest.normalize:
        matrix = _normalize_rows(matrix)
    write_emb1(
        manifest.out_path,
        matrix,
        ids=_unique_ids(list(manifest.texts)),
        metadata={
            "encoder": encoder.name,
            "kind": "text",
            "normalize": str(manifest.normalize).lower(),
        },
    )
    log.info("wrote %d text rows (dim %d) to %s", len(manifest.texts),
             encoder.dim, manifest.out_path)
    return Path(manifest.out_path)


def list_images(directory: str | Path) -> tuple[Path, ...]:
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    return tuple(
        sorted(
            p
            for p in directory.iterdir()
            if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
        )
    )
