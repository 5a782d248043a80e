"""Offline embedding extraction to EMB1 fixture files."""

__version__ = "0.1.0"

from .emb1 import manifest_path, read_emb1, write_emb1
from .encoders import (
    CLIP_CHECKPOINTS,
    ClipEncoder,
    EncoderUnavailableError,
    HashEncoder,
    get_encoder,
)
from .extract import (
    DEFAULT_CONTENT_PHRASE,
    ExtractionManifest,
    extract_image_embeddings,
    extract_text_embeddings,
    list_images,
)

__all__ = [
    "__version__",
    "manifest_path",
    "read_emb1",
    "write_emb1",
    "CLIP_CHECKPOINTS",
    "ClipEncoder",
    "EncoderUnavailableError",
    "HashEncoder",
    "get_encoder",
    "DEFAULT_CONTENT_PHRASE",
    "ExtractionManifest",
    "extract_image_embeddings",
    "extract_text_embeddings",
    "list_images",
]
