"""Encoder backends.

Two families:

* ``hash-<dim>`` — a deterministic, download-free encoder. Text is embedded
  by summing seeded random projections of word and character-trigram tokens;
  images are decoded, downsampled, and pushed through a fixed random
  projection. Useful for fixtures and tests; it has no semantics beyond
  locality (shared tokens / similar pixels correlate).
* pretrained vision-language checkpoints (``vit-b-32``, ``vit-l-14``,
  ``vit-h-14``) loaded through `transformers`. Weights are an external
  download and are never vendored; constructing one of these raises
  :class:`EncoderUnavailableError` when the checkpoint cannot be loaded.

Every encoder is deterministic in evaluation mode: identical inputs produce
identical embeddings run over run.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np
from PIL import Image

CLIP_CHECKPOINTS = {
    "vit-b-32": "openai/clip-vit-base-patch32",
    "vit-l-14": "openai/clip-vit-large-patch14",
    "vit-h-14": "laion/CLIP-ViT-H-14-laion2B-s32B-b79K",
}

_IMAGE_GRID = 16  # images are downsampled to GRID x GRID RGB before projection


class EncoderUnavailableError(RuntimeError):
    """The requested encoder backend cannot be loaded in this environment."""


def _seed_from(label: str) -> np.random.Generator:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class HashEncoder:
    """Deterministic token/pixel-projection encoder; needs no downloads."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = int(dim)
        self.name = f"hash-{dim}"
        self._image_proj = _seed_from(f"image-proj-{dim}").standard_normal(
            (_IMAGE_GRID * _IMAGE_GRID * 3, dim)
        ) / np.sqrt(_IMAGE_GRID * _IMAGE_GRID * 3)

    def _token_vector(self, token: str) -> np.ndarray:
        return _seed_from(f"tok-{self.dim}-{token}").standard_normal(self.dim)

    @staticmethod
    def _tokens(text: str) -> list[str]:
        words = re.findall(r"[a-z0-9]+", text.lower())
        trigrams = [w[i : i + 3] for w in words for i in range(max(len(w) - 2, 1))]
        return words + trigrams

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            tokens = self._tokens(text)
            if not tokens:
                continue
            acc = np.zeros(self.dim)
            for tok in tokens:
                acc += self._token_vector(tok)
            out[row] = acc / np.sqrt(len(tokens))
        return out

    def encode_images(self, paths: list[Path]) -> np.ndarray:
        out = np.zeros((len(paths), self.dim))
        for row, path in enumerate(paths):
            with Image.open(path) as img:
                small = img.convert("RGB").resize(
                    (_IMAGE_GRID, _IMAGE_GRID), Image.BILINEAR
                )
            pixels = np.asarray(small, dtype=np.float64).reshape(-1) / 255.0
            out[row] = pixels @ self._image_proj
        return out


class ClipEncoder:
    """Pretrained CLIP-style encoder via transformers; weights load lazily."""

    def __init__(self, name: str):
        checkpoint = CLIP_CHECKPOINTS[name]
        self.name = name
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderUnavailableError(
                f"{name} needs the [clip] extra (torch + transformers): {exc}"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(checkpoint)
            self._processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as exc:  # no cache and no network, typically
            raise EncoderUnavailableError(
                f"cannot load checkpoint {checkpoint!r}: {exc}"
            ) from exc
        self._torch = torch
        self._model.eval()
        self.dim = int(self._model.config.projection_dim)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        inputs = self._processor(text=texts, return_tensors="pt", padding=True)
        with self._torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(np.float64)

    def encode_images(self, paths: list[Path]) -> np.ndarray:
        images = []
        for path in paths:
            with Image.open(path) as img:
                images.append(img.convert("RGB"))
        inputs = self._processor(images=images, return_tensors="pt")
        with self._torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats.cpu().numpy().astype(np.float64)


def get_encoder(name: str):
    """Resolve an encoder by name: ``hash-<dim>`` or a pretrained checkpoint."""
    if name.startswith("hash-"):
        try:
            dim = int(name.split("-", 1)[1])
        except ValueError:
            raise ValueError(f"bad hash encoder name {name!r}; use hash-<dim>")
        return HashEncoder(dim)
    if name in CLIP_CHECKPOINTS:
        return ClipEncoder(name)
    choices = ["hash-<dim>"] + sorted(CLIP_CHECKPOINTS)
    raise ValueError(f"unknown encoder {name!r}; choices: {', '.join(choices)}")
