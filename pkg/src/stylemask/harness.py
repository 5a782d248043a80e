"""Batch studies over embedding corpora.

Three batch drivers live here: the fixed-proportion energy sweep comparing
the product-based mask selection against the absolute-difference baseline,
the clustering-number ablation sweep, and plain metric evaluation over a
corpus of items. Sweeps use top-m selection at each proportion (rather than
clustering) so the two strategies always discard exactly the same number of
elements, which keeps every comparison count-fair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import EmbeddingSet, FeatureVector, MaskVector
from .energy import residual_content_energy
from .errors import ValidationError
from .masking import (
    apply_mask,
    build_cluster_mask,
    elementwise_product,
    round_half_up,
    top_m_indices,
)
from .metrics import (
    EvalItem,
    MetricsReport,
    alignment_scores,
    fidelity_score,
    item_record,
    leakage_score,
    style_score,
)

FIVE_POINTS = (0.0, 25.0, 50.0, 75.0, 100.0)
TABLE9_PROPORTIONS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
STRATEGY_NAMES = ("product", "absdiff")


def percentiles(values: Sequence[float], ps: Sequence[float]) -> list[float]:
    """Inclusive linear-interpolation percentiles of a sample.

    The p-th percentile sits at fractional rank p/100 * (n - 1) of the sorted
    sample, interpolating linearly between the neighboring order statistics.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("percentiles need a nonempty sample")
    for p in ps:
        if not 0.0 <= p <= 100.0:
            raise ValidationError(f"percentile {p} outside [0, 100]")
    sorted_vals = np.sort(arr)
    out = []
    for p in ps:
        rank = p / 100.0 * (arr.size - 1)
        lo = int(math.floor(rank))
        hi = int(math.ceil(rank))
        frac = rank - lo
        out.append(float(sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac))
    return out


@dataclass(frozen=True)
class SweepConfig:
    """Settings for energy and clustering-number sweeps."""

    proportions: tuple[float, ...] = TABLE9_PROPORTIONS
    temperature: float = 1.0
    k_values: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.proportions:
            raise ValidationError("proportions must be nonempty")
        for p in self.proportions:
            if not 0.0 < p <= 1.0:
                raise ValidationError(f"proportion {p} outside (0, 1]")
        if self.temperature <= 0.0:
            raise ValidationError(f"temperature must be > 0, got {self.temperature}")
        if self.k_values is not None:
            if not self.k_values:
                raise ValidationError("k_values must be nonempty when given")
            for k in self.k_values:
                if k < 2:
                    raise ValidationError(f"k values must be >= 2, got {k}")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        object.__setattr__(self, "proportions", tuple(self.proportions))
        if self.k_values is not None:
            object.__setattr__(self, "k_values", tuple(self.k_values))

    def to_json_dict(self) -> dict:
        doc: dict = {
            "proportions": list(self.proportions),
            "temperature": self.temperature,
        }
        if self.k_values is not None:
            doc["k_values"] = list(self.k_values)
        doc["seed"] = self.seed
        return doc


@dataclass(frozen=True)
class EnergyReport:
    """Percentile rows of residual-content energies, per strategy and proportion."""

    config: SweepConfig
    strategies: dict[str, dict[float, tuple[float, ...]]]
    n_pairs: int

    @property
    def proportions(self) -> tuple[float, ...]:
        return self.config.proportions

    @property
    def temperature(self) -> float:
        return self.config.temperature

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "strategies": {
                name: {str(p): list(row) for p, row in rows.items()}
                for name, rows in self.strategies.items()
            },
            "n_pairs": self.n_pairs,
        }


def _paired_rows(
    image_set: EmbeddingSet, text_set: EmbeddingSet
) -> list[tuple[FeatureVector, FeatureVector]]:
    """Align image rows with text rows; a single text row broadcasts."""
    if image_set.dim != text_set.dim:
        raise ValidationError(
            f"dimension mismatch: image dim {image_set.dim}, text dim {text_set.dim}"
        )
    if image_set.count == 0:
        raise ValidationError("image set has no rows")
    if text_set.count == image_set.count:
        texts = text_set.vectors()
    elif text_set.count == 1:
        texts = text_set.vectors() * image_set.count
    else:
        raise ValidationError(
            f"row count mismatch: {image_set.count} image rows vs "
            f"{text_set.count} text rows (only a single text row broadcasts)"
        )
    return list(zip(image_set.vectors(), texts))


def _masked_energy(
    e1: FeatureVector, e2: FeatureVector, zero_idx: np.ndarray, temperature: float
) -> float:
    bits = np.ones(e1.dim)
    bits[zero_idx] = 0.0
    return residual_content_energy(
        apply_mask(e1, MaskVector(bits)), e2, temperature
    )


def energy_sweep(
    image_set: EmbeddingSet, text_set: EmbeddingSet, config: SweepConfig
) -> EnergyReport:
    """Fixed-proportion masking sweep over aligned (image, text) pairs.

    At each proportion both strategies discard exactly round-half-up(p * d)
    elements: the product strategy drops the largest products, the baseline
    drops the largest absolute differences. Reported rows are the 0/25/50/75/
    100th percentiles of the residual-content energies pooled over all pairs.
    """
    pairs = _paired_rows(image_set, text_set)
    samples: dict[str, dict[float, list[float]]] = {
        name: {p: [] for p in config.proportions} for name in STRATEGY_NAMES
    }
    for e1, e2 in pairs:
        products = e1.values * e2.values
        absdiff = np.abs(e1.values - e2.values)
        for p in config.proportions:
            m_count = round_half_up(p * e1.dim)
            samples["product"][p].append(
                _masked_energy(
                    e1, e2, top_m_indices(products, m_count), config.temperature
                )
            )
            samples["absdiff"][p].append(
                _masked_energy(
                    e1, e2, top_m_indices(absdiff, m_count), config.temperature
                )
            )
    strategies = {
        name: {
            p: tuple(percentiles(vals, FIVE_POINTS))
            for p, vals in per_prop.items()
        }
        for name, per_prop in samples.items()
    }
    return EnergyReport(config=config, strategies=strategies, n_pairs=len(pairs))


def format_energy_table(report: EnergyReport) -> str:
    """Aligned-column plain-text rendering of an energy report."""
    header = ["Proportion", "Strategy", "p0", "p25", "p50", "p75", "p100"]
    rows = [header]
    for p in report.proportions:
        for name in STRATEGY_NAMES:
            vals = report.strategies[name][p]
            rows.append(
                [f"{p * 100:.0f}%", name] + [f"{v:.4f}" for v in vals]
            )
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def evaluate_corpus(
    items: Sequence[EvalItem], per_item: bool = False
) -> MetricsReport:
    """Run the full metric suite over a corpus of items."""
    if not items:
        raise ValidationError("evaluate_corpus needs at least one item")
    image_alignment, text_alignment = alignment_scores(items)
    records = (
        tuple(item_record(item, i) for i, item in enumerate(items))
        if per_item
        else None
    )
    return MetricsReport(
        fidelity=fidelity_score(items),
        leakage=leakage_score(items),
        style=style_score(items),
        image_alignment=image_alignment,
        text_alignment=text_alignment,
        n_items=len(items),
        per_item=records,
    )


@dataclass(frozen=True)
class KSweepEntry:
    """One clustering-number setting: metric suite plus per-pair masked counts."""

    k: int
    metrics: MetricsReport
    masked_counts: tuple[int, ...]


def mask_items_at_k(
    image_set: EmbeddingSet,
    text_set: EmbeddingSet,
    items: Sequence[EvalItem],
    k: int,
) -> tuple[list[EvalItem], tuple[int, ...]]:
    """Rebuild each item's style-reference feature under K-cluster masking."""
    pairs = _paired_rows(image_set, text_set)
    if len(items) != len(pairs):
        raise ValidationError(
            f"{len(items)} items for {len(pairs)} corpus pairs"
        )
    masked_items: list[EvalItem] = []
    counts: list[int] = []
    for (e1, e2), item in zip(pairs, items):
        mask = build_cluster_mask(elementwise_product(e1, e2), k)
        counts.append(mask.masked_count)
        masked_items.append(replace(item, e1=apply_mask(e1, mask)))
    return masked_items, tuple(counts)


def k_sweep(
    image_set: EmbeddingSet,
    text_set: EmbeddingSet,
    items: Sequence[EvalItem],
    k_values: Sequence[int],
) -> dict[int, KSweepEntry]:
    """Clustering-number ablation: re-mask the corpus at each K and re-score."""
    if not k_values:
        raise ValidationError("k_sweep needs at least one K")
    out: dict[int, KSweepEntry] = {}
    for k in k_values:
        masked_items, counts = mask_items_at_k(image_set, text_set, items, k)
        out[int(k)] = KSweepEntry(
            k=int(k),
            metrics=evaluate_corpus(masked_items),
            masked_counts=counts,
        )
    return out


def synthetic_pair_corpus(
    n_pairs: int, dim: int, seed: int
) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Seeded standard-normal (image, text) pair corpus for sweeps and tests."""
    if n_pairs < 1 or dim < 1:
        raise ValidationError("need n_pairs >= 1 and dim >= 1")
    rng = np.random.default_rng(seed)
    image = EmbeddingSet.from_matrix(rng.standard_normal((n_pairs, dim)))
    text = EmbeddingSet.from_matrix(rng.standard_normal((n_pairs, dim)))
    return image, text
