"""Energy scores over embedding features.

The free-energy score is -T * log(sum(exp(v_i / T))) over a logit vector;
higher means the measured condition is less compatible with the feature.
Masking a positive logit to zero therefore raises the score, which is what
makes it a useful probe of how much content signal a mask removed.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import FeatureVector, cosine_similarity
from .errors import ValidationError


def free_energy(v: FeatureVector | Sequence[float] | np.ndarray, temperature: float = 1.0) -> float:
    """Free-energy score -T * ln(sum_i exp(v_i / T)), max-shifted for overflow safety."""
    arr = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("free_energy needs a nonempty logit vector")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("free_energy logits must be finite")
    if temperature <= 0.0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    scaled = arr / temperature
    shift = float(np.max(scaled))
    lse = shift + math.log(math.fsum(np.exp(scaled - shift)))
    return -temperature * lse


def residual_content_energy(
    e1_masked: FeatureVector, e2: FeatureVector, temperature: float = 1.0
) -> float:
    """Free energy of the full-length product logits of a masked image feature.

    Masked slots hold value 0 and so contribute logit 0 (i.e. exp(0) mass);
    the vector length never changes with the mask.
    """
    if e1_masked.dim != e2.dim:
        raise ValidationError(f"dimension mismatch: {e1_masked.dim} vs {e2.dim}")
    return free_energy(e1_masked.values * e2.values, temperature)


def distance_energy(c_emb: FeatureVector, x_emb: FeatureVector) -> float:
    """Time-independent guidance energy: 1 - cosine similarity.

    Smaller means the condition embedding is more compatible with the data
    embedding.
    """
    return 1.0 - cosine_similarity(c_emb, x_emb)
