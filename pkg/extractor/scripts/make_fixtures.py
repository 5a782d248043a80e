#!/usr/bin/env python3
"""Produce the small fixture corpus checked into the main package's tests.

Synthesizes a deterministic set of procedural style images (seeded noise,
gradients, and blob compositions), encodes them with the download-free
hash-512 encoder, and encodes the default foreground content phrase. The
resulting EMB1 files stand in for an encoder-produced corpus; the test suite
never regenerates them, it only loads them.

Run from the repository root:
    python extractor/scripts/make_fixtures.py
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from embextract.extract import (  # noqa: E402
    DEFAULT_CONTENT_PHRASE,
    ExtractionManifest,
    extract_image_embeddings,
    extract_text_embeddings,
)

FIXTURES_DIR = Path(__file__).resolve().parents[2] / "tests" / "fixtures"
N_IMAGES = 24
SIZE = 64
ENCODER = "hash-512"


def synth_image(rng: np.random.Generator) -> Image.Image:
    """One procedural 64x64 RGB image: gradient base + noise + blobs."""
    yy, xx = np.mgrid[0:SIZE, 0:SIZE] / (SIZE - 1)
    base = np.stack(
        [
            rng.uniform(0, 1) * xx + rng.uniform(0, 1) * yy,
            rng.uniform(0, 1) * (1 - xx) + rng.uniform(0, 1) * yy,
            rng.uniform(0, 1) * xx * yy + rng.uniform(0, 0.5),
        ],
        axis=-1,
    )
    base += 0.15 * rng.random((SIZE, SIZE, 3))
    for _ in range(rng.integers(2, 6)):
        cx, cy = rng.uniform(0, SIZE, size=2)
        radius = rng.uniform(4, 14)
        blob = ((np.mgrid[0:SIZE] - cy)[:, None] ** 2 +
                (np.mgrid[0:SIZE] - cx)[None, :] ** 2) < radius**2
        base[blob] = rng.uniform(0, 1, size=3)
    return Image.fromarray((np.clip(base, 0, 1) * 255).astype(np.uint8))


def main() -> None:
    FIXTURES_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240901)
    with tempfile.TemporaryDirectory() as tmp:
        tmp_dir = Path(tmp)
        paths = []
        for i in range(N_IMAGES):
            path = tmp_dir / f"style-{i:02d}.png"
            synth_image(rng).save(path)
            paths.append(path)
        extract_image_embeddings(
            ExtractionManifest(
                encoder_name=ENCODER,
                out_path=FIXTURES_DIR / "style_refs.emb",
                image_paths=tuple(paths),
            )
        )
    extract_text_embeddings(
        ExtractionManifest(
            encoder_name=ENCODER,
            out_path=FIXTURES_DIR / "content_phrase.emb",
            texts=(DEFAULT_CONTENT_PHRASE,),
        )
    )
    print(f"fixtures written to {FIXTURES_DIR}")


if __name__ == "__main__":
    main()
