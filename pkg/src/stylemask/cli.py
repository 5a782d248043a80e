"""Command-line front end.

Commands
--------
mask             derive masking vectors from (image, text) embedding files and
                 write the masked features
evaluate         score a generated/style/content/prompt embedding quadruple
simulate-energy  fixed-proportion energy sweep comparing mask strategies
verify-theory    run the exact discrete checks of the package's inequalities
cluster          debug: exact 1-D k-means over one embedding row

Exit codes: 0 success, 1 I/O error, 2 validation error, 3 property violation.
Every failure path prints a single "error: ..." line to stderr. Reports are
deterministic: identical flags and input files produce byte-identical files.

Flag values win over the optional --config JSON file, which wins over built-in
defaults. STYLEMASK_LOG in {error, warn, info, debug} controls log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core import (
    EmbeddingSet,
    FeatureVector,
    load_embeddings,
    save_embeddings,
)
from .errors import StylemaskError, ValidationError
from .harness import (
    SweepConfig,
    energy_sweep,
    evaluate_corpus,
    format_energy_table,
)
from .masking import MaskStrategy, apply_mask, kmeans_1d, mask_for_pair
from .metrics import EvalItem
from .theory import (
    random_adapter_instance,
    random_masked_instance,
    verify_adapter_superiority,
    verify_masked_conditioning,
)
from .masking import verify_selection_dominance

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_VIOLATION = 3

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

log = logging.getLogger("stylemask")

_DEFAULTS: dict[str, dict[str, Any]] = {
    "mask": {"strategy": "product-cluster", "k": 2, "fraction": None, "seed": 0},
    "evaluate": {"per_item": False},
    "simulate-energy": {
        "proportions": "0.05,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        "temperature": 1.0,
        "seed": 0,
    },
    "verify-theory": {"trials": 200, "seed": 0},
    "cluster": {"k": 2, "row": 0},
}


def _setup_logging() -> None:
    level_name = os.environ.get("STYLEMASK_LOG", "warn").lower()
    level = _LOG_LEVELS.get(level_name, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s", level=level)


def _resolve(args: argparse.Namespace, command: str) -> argparse.Namespace:
    """Apply flags > config file > defaults for every None-valued option."""
    config: dict[str, Any] = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--config {args.config}: invalid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ValidationError(f"--config {args.config}: expected a JSON object")
        config = doc.get(command, {})
        if not isinstance(config, dict):
            raise ValidationError(f"--config section {command!r} must be an object")
    defaults = _DEFAULTS.get(command, {})
    for key in defaults:
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, defaults[key]))
    return args


def _write_json(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _load(path: str) -> EmbeddingSet:
    return load_embeddings(path)


def _broadcast_sets(sets: dict[str, EmbeddingSet]) -> dict[str, list[FeatureVector]]:
    dims = {name: s.dim for name, s in sets.items()}
    if len(set(dims.values())) != 1:
        detail = ", ".join(f"{name} dim {d}" for name, d in dims.items())
        raise ValidationError(f"embedding files disagree on dim: {detail}")
    counts = {name: s.count for name, s in sets.items()}
    n = max(counts.values())
    if n == 0:
        raise ValidationError("all embedding files are empty")
    out: dict[str, list[FeatureVector]] = {}
    for name, s in sets.items():
        if s.count == n:
            out[name] = list(s.vectors())
        elif s.count == 1:
            out[name] = list(s.vectors()) * n
        else:
            raise ValidationError(
                f"row count mismatch: {name} has {s.count} rows, expected {n} or 1"
            )
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_mask(args: argparse.Namespace) -> int:
    strategy = MaskStrategy(
        kind=args.strategy,
        k=int(args.k),
        fraction=None if args.fraction is None else float(args.fraction),
        seed=int(args.seed),
    )
    image_set = _load(args.image_emb)
    text_set = _load(args.text_emb)
    pairs = _broadcast_sets({"image": image_set, "text": text_set})
    rng = np.random.default_rng(strategy.seed)

    masked_rows = []
    mask_rows = []
    untouched = 0
    for e1, e2 in zip(pairs["image"], pairs["text"]):
        mask = mask_for_pair(strategy, e1, e2, rng=rng)
        if mask.masked_count == 0:
            untouched += 1
        masked_rows.append(apply_mask(e1, mask).values)
        mask_rows.append(mask.bits)
    if untouched:
        log.warning("%d of %d rows had nothing masked", untouched, len(masked_rows))

    ids = image_set.ids if image_set.count == len(masked_rows) else None
    save_embeddings(
        EmbeddingSet.from_matrix(np.stack(masked_rows), ids=ids), args.out
    )
    if args.mask_out:
        save_embeddings(
            EmbeddingSet.from_matrix(np.stack(mask_rows), ids=ids), args.mask_out
        )
    log.info("wrote %d masked rows to %s", len(masked_rows), args.out)
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    sets = {
        "generated": _load(args.generated),
        "style_ref": _load(args.style_ref),
        "content_text": _load(args.content_text),
        "prompt_text": _load(args.prompt_text),
    }
    rows = _broadcast_sets(sets)
    items = [
        EvalItem(e_g=g, e1=s, e2=c, e3=p)
        for g, s, c, p in zip(
            rows["generated"], rows["style_ref"], rows["content_text"], rows["prompt_text"]
        )
    ]
    report = evaluate_corpus(items, per_item=bool(args.per_item))
    _write_json(report.to_json_dict(), args.report)
    if not args.no_figures:
        from .plotting import render_metrics_figure

        render_metrics_figure(report, Path(args.report).with_suffix(".png"))
    for name in ("fidelity", "leakage", "style", "image_alignment", "text_alignment"):
        print(f"{name} {getattr(report, name):.3f}")
    return EXIT_OK


def _cmd_simulate_energy(args: argparse.Namespace) -> int:
    try:
        proportions = tuple(float(tok) for tok in str(args.proportions).split(",") if tok)
    except ValueError as exc:
        raise ValidationError(f"--proportions: {exc}")
    config = SweepConfig(
        proportions=proportions,
        temperature=float(args.temperature),
        seed=int(args.seed),
    )
    image_set = _load(args.image_embs)
    text_set = _load(args.text_embs)
    report = energy_sweep(image_set, text_set, config)
    _write_json(report.to_json_dict(), args.report)
    table_path = Path(args.report).with_suffix(".txt")
    table_path.write_text(format_energy_table(report))
    if not args.no_figures:
        from .plotting import render_energy_figure

        render_energy_figure(report, Path(args.report).with_suffix(".png"))
    print(format_energy_table(report), end="")
    return EXIT_OK


def _verify_prop1_trial(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    d = int(rng.integers(4, 13))
    e1 = FeatureVector(rng.standard_normal(d))
    e2 = FeatureVector(rng.standard_normal(d))
    holds = all(
        verify_selection_dominance(e1, e2, m).holds for m in range(d + 1)
    )
    return {"theorem": "prop1", "seed": seed, "sizes": {"d": d}, "holds": holds}


def _cmd_verify_theory(args: argparse.Namespace) -> int:
    trials = int(args.trials)
    if trials < 1:
        raise ValidationError(f"--trials must be >= 1, got {trials}")
    seed = int(args.seed)
    reports: list[dict] = []
    violations: list[int] = []
    for i in range(trials):
        trial_seed = seed + i
        if args.theorem == "1":
            rep = verify_masked_conditioning(random_masked_instance(trial_seed))
            doc = rep.to_json_dict()
            violated = bool(rep.assumption_holds) and not rep.holds
        elif args.theorem == "2":
            rep = verify_adapter_superiority(random_adapter_instance(trial_seed))
            doc = rep.to_json_dict()
            violated = not rep.holds
        else:
            doc = _verify_prop1_trial(trial_seed)
            violated = not doc["holds"]
        reports.append(doc)
        if violated:
            violations.append(trial_seed)

    _write_json(
        {
            "theorem": args.theorem,
            "trials": trials,
            "seed": seed,
            "violations": violations,
            "reports": reports,
        },
        args.report,
    )
    if violations:
        print(
            f"error: theorem {args.theorem} violated at seeds {violations[:5]}"
            + (" ..." if len(violations) > 5 else ""),
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    print(f"theorem {args.theorem}: {trials} trials, 0 violations")
    return EXIT_OK


def _cmd_cluster(args: argparse.Namespace) -> int:
    values_set = _load(args.values)
    row = int(args.row)
    if not 0 <= row < values_set.count:
        raise ValidationError(
            f"--row {row} out of range for {values_set.count} rows"
        )
    clustering = kmeans_1d(values_set.vectors()[row].values, int(args.k))
    print(
        json.dumps(
            {
                "labels": clustering.labels.tolist(),
                "centroids": clustering.centroids.tolist(),
                "within_sse": clustering.within_sse,
                "effective_k": clustering.effective_k,
            },
            indent=2,
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylemask",
        description="Embedding-space content/style disentanglement toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="optional JSON config file", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="mask content-related elements of image features")
    p.add_argument("--image-emb", required=True)
    p.add_argument("--text-emb", required=True)
    p.add_argument(
        "--strategy",
        choices=["product-cluster", "absdiff-cluster", "top-frac", "random"],
        default=None,
    )
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out", default=None)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("evaluate", help="score a generated-image embedding corpus")
    p.add_argument("--generated", required=True)
    p.add_argument("--style-ref", required=True)
    p.add_argument("--content-text", required=True)
    p.add_argument("--prompt-text", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--per-item", action="store_true", default=None)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("simulate-energy", help="fixed-proportion energy sweep")
    p.add_argument("--image-embs", required=True)
    p.add_argument("--text-embs", required=True)
    p.add_argument("--proportions", default=None, help="comma-separated, each in (0,1]")
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_simulate_energy)

    p = sub.add_parser("verify-theory", help="run the exact discrete checks")
    p.add_argument("--theorem", choices=["1", "2", "prop1"], required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_verify_theory)

    p = sub.add_parser("cluster", help="debug: exact 1-D k-means over one row")
    p.add_argument("--values", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--row", type=int, default=None)
    p.set_defaults(func=_cmd_cluster)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve(args, args.command)
        if getattr(args, "strategy", None) == "top-frac":
            args.strategy = "top-fraction"  # CLI spelling vs. library kind name
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        filename = getattr(exc, "filename", None)
        print(f"error: {filename or exc}: {exc.strerror or 'I/O error'}", file=sys.stderr)
        return EXIT_IO
    except StylemaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
