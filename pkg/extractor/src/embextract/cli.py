"""CLI: encode images or text phrases into EMB1 fixture files.

Usage:
    embextract extract --images DIR --encoder hash-512 --out style.emb
    embextract extract --texts phrases.txt --encoder vit-h-14 --out content.emb

Blank lines in a --texts file are ignored; everything else becomes one row,
with the phrase as its row id.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from .encoders import EncoderUnavailableError
from .extract import (
    ExtractionManifest,
    extract_image_embeddings,
    extract_text_embeddings,
    list_images,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embextract")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="encode inputs and write an EMB1 file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--images", help="directory of images to encode")
    src.add_argument("--texts", help="file with one phrase per line")
    p.add_argument("--encoder", required=True,
                   help="hash-<dim> or a pretrained name (vit-b-32, vit-l-14, vit-h-14)")
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--strict", action="store_true",
                   help="abort on undecodable images instead of skipping")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        level=logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        if args.images:
            manifest = ExtractionManifest(
                encoder_name=args.encoder,
                out_path=Path(args.out),
                image_paths=list_images(args.images),
                normalize=not args.no_normalize,
                strict=args.strict,
            )
            extract_image_embeddings(manifest)
        else:
            lines = Path(args.texts).read_text().splitlines()
            phrases = tuple(line.strip() for line in lines if line.strip())
            manifest = ExtractionManifest(
                encoder_name=args.encoder,
                out_path=Path(args.out),
                texts=phrases,
                normalize=not args.no_normalize,
                strict=args.strict,
            )
            extract_text_embeddings(manifest)
    except (FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, EncoderUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
