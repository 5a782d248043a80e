"""Evaluation metrics over CLIP-style embedding quadruples.

Each evaluated item carries four embeddings: the generated image (e_g), the
style-reference image (e1), the reference's content text (e2), and the target
prompt text (e3). An item is *correctly classified* when the generated image
sits strictly closer (cosine) to the target prompt than to the reference's
content text; fidelity, leakage, and style scores all branch on that test.

All aggregates use exact compensated summation (math.fsum), so permuting the
item list can never change a reported score.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .core import FeatureVector, cosine_similarity
from .errors import ValidationError, ZeroNormWarning

LEAKAGE_DENOMINATOR_GUARD = 1e-8


@dataclass(frozen=True)
class EvalItem:
    """One evaluation record: generated image vs. its conditioning embeddings."""

    e_g: FeatureVector
    e1: FeatureVector
    e2: FeatureVector
    e3: FeatureVector

    def __post_init__(self):
        dims = {self.e_g.dim, self.e1.dim, self.e2.dim, self.e3.dim}
        if len(dims) != 1:
            raise ValidationError(f"item embeddings disagree on dim: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.e_g.dim


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate scores for a corpus of evaluated items."""

    fidelity: float
    leakage: float
    style: float
    image_alignment: float
    text_alignment: float
    n_items: int
    per_item: tuple[dict, ...] | None = None

    def to_json_dict(self) -> dict:
        doc = {
            "fidelity": self.fidelity,
            "leakage": self.leakage,
            "style": self.style,
            "image_alignment": self.image_alignment,
            "text_alignment": self.text_alignment,
            "n_items": self.n_items,
        }
        if self.per_item is not None:
            doc["per_item"] = [dict(rec) for rec in self.per_item]
        return doc


def classify_item(item: EvalItem) -> bool:
    """True when the generated image reads as the target content.

    Requires cos(e2, e_g) strictly below cos(e3, e_g); an exact tie counts as
    misclassified, erring toward reporting leakage.
    """
    return cosine_similarity(item.e2, item.e_g) < cosine_similarity(item.e3, item.e_g)


def _require_items(items: Sequence[EvalItem]) -> None:
    if not items:
        raise ValidationError("metric aggregation needs at least one item")


def _leakage_value(item: EvalItem, correct: bool) -> float:
    if not correct:
        return 1.0
    denom = cosine_similarity(item.e1, item.e2)
    if abs(denom) < LEAKAGE_DENOMINATOR_GUARD:
        warnings.warn(
            "leakage calibration term cos(e1, e2) is ~0; counting item as full leakage",
            ZeroNormWarning,
        )
        return 1.0
    return cosine_similarity(item.e_g, item.e2) / denom


def fidelity_score(items: Sequence[EvalItem]) -> float:
    """Fraction of items whose generated image is closer to the target prompt."""
    _require_items(items)
    return sum(1 for item in items if classify_item(item)) / len(items)


def leakage_score(items: Sequence[EvalItem]) -> float:
    """Mean content-leakage ratio; misclassified items count as full leakage (1)."""
    _require_items(items)
    vals = [_leakage_value(item, classify_item(item)) for item in items]
    return math.fsum(vals) / len(vals)


def style_score(items: Sequence[EvalItem]) -> float:
    """Mean of cos(e_g, e1) - cos(e_g, e2) over correct items; 0 for misclassified."""
    _require_items(items)
    vals = [
        cosine_similarity(item.e_g, item.e1) - cosine_similarity(item.e_g, item.e2)
        if classify_item(item)
        else 0.0
        for item in items
    ]
    return math.fsum(vals) / len(vals)


def alignment_scores(items: Sequence[EvalItem]) -> tuple[float, float]:
    """(image_alignment, text_alignment): mean cos(e_g, e1) and mean cos(e_g, e3)."""
    _require_items(items)
    img = [cosine_similarity(item.e_g, item.e1) for item in items]
    txt = [cosine_similarity(item.e_g, item.e3) for item in items]
    return math.fsum(img) / len(img), math.fsum(txt) / len(txt)


def item_record(item: EvalItem, index: int) -> dict:
    """Per-item breakdown used by reports with --per-item enabled."""
    correct = classify_item(item)
    return {
        "index": index,
        "correct": correct,
        "leakage": _leakage_value(item, correct),
        "style": (
            cosine_similarity(item.e_g, item.e1) - cosine_similarity(item.e_g, item.e2)
            if correct
            else 0.0
        ),
        "image_alignment": cosine_similarity(item.e_g, item.e1),
        "text_alignment": cosine_similarity(item.e_g, item.e3),
    }
