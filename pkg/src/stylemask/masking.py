"""Mask selection over embedding features.

The central pipeline: multiply an image feature with a content-text feature
element-wise, cluster the products into K groups, and zero out the elements
belonging to the cluster with the largest mean. Alternative selections
(absolute-difference clustering, fixed top-fraction, seeded random) are
provided as comparison baselines.

Clustering is exact 1-D k-means, computed by sorting and dynamic programming
over contiguous partitions. It is deterministic and seed-free, which keeps
mask outputs reproducible byte-for-byte.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import FeatureVector, MaskVector
from .errors import CapacityError, DegenerateClusterWarning, ValidationError

EXHAUSTIVE_DIM_LIMIT = 20

MASK_STRATEGY_KINDS = ("product-cluster", "absdiff-cluster", "top-fraction", "random")


@dataclass(frozen=True)
class Clustering1D:
    """Result of exact 1-D k-means.

    ``labels[i]`` is the cluster index of ``values[i]``; clusters are numbered
    by ascending centroid, so ``effective_k - 1`` is always the highest-means
    cluster. ``within_sse`` is the summed squared deviation of every value
    from its own centroid, which the DP guarantees is the global minimum over
    contiguous partitions.
    """

    labels: np.ndarray
    centroids: np.ndarray
    within_sse: float
    effective_k: int


@dataclass(frozen=True)
class MaskStrategy:
    """Parameterized choice of mask-selection rule."""

    kind: str
    k: int = 2
    fraction: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in MASK_STRATEGY_KINDS:
            raise ValidationError(
                f"unknown strategy {self.kind!r}; expected one of {MASK_STRATEGY_KINDS}"
            )
        if self.kind in ("product-cluster", "absdiff-cluster"):
            if self.k < 1:
                raise ValidationError("cluster strategies need k >= 1")
        if self.kind in ("top-fraction", "random"):
            if self.fraction is None or not 0.0 <= self.fraction <= 1.0:
                raise ValidationError(
                    f"{self.kind} needs a fraction in [0, 1], got {self.fraction}"
                )
        if self.kind == "random" and (self.seed is None or self.seed < 0):
            raise ValidationError("random strategy needs a nonnegative seed")


def elementwise_product(e1: FeatureVector, e2: FeatureVector) -> FeatureVector:
    """Coordinate-wise product of an image feature and a content-text feature."""
    if e1.dim != e2.dim:
        raise ValidationError(f"dimension mismatch: {e1.dim} vs {e2.dim}")
    return FeatureVector(e1.values * e2.values)


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves up; guarded against binary-float dust."""
    return int(math.floor(x + 0.5 + 1e-9))


def top_m_indices(values: np.ndarray, m: int) -> np.ndarray:
    """Indices of the ``m`` largest values, ties broken toward lower index."""
    if not 0 <= m <= values.size:
        raise ValidationError(f"m={m} out of range for {values.size} values")
    order = np.argsort(-values, kind="stable")
    return np.sort(order[:m])


def kmeans_1d(values: Sequence[float] | np.ndarray, k: int) -> Clustering1D:
    """Globally optimal 1-D k-means via sort + dynamic programming.

    With fewer distinct values than ``k``, the cluster count collapses to the
    distinct count (warning, not an error): repeated zeros are routine in
    element-wise product features.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError("kmeans_1d needs a nonempty 1-D value sequence")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("kmeans_1d values must be finite")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")

    # the DP runs over distinct values with multiplicity weights: an optimal
    # contiguous partition never separates equal values, and building that in
    # structurally keeps labels a pure function of the value
    uniq, counts = np.unique(arr, return_counts=True)
    d_count = uniq.size
    m = min(k, int(d_count))
    if m < k:
        warnings.warn(
            f"only {d_count} distinct values for k={k}; using {m} clusters",
            DegenerateClusterWarning,
        )

    w = counts.astype(np.float64)
    cumw = np.concatenate(([0.0], np.cumsum(w)))
    cums = np.concatenate(([0.0], np.cumsum(w * uniq)))
    cums2 = np.concatenate(([0.0], np.cumsum(w * uniq * uniq)))

    def seg_cost(i: np.ndarray, j: int) -> np.ndarray:
        # weighted SSE of uniq[i..j] inclusive, for a vector of start indices
        s = cums[j + 1] - cums[i]
        return np.maximum(
            (cums2[j + 1] - cums2[i]) - s * s / (cumw[j + 1] - cumw[i]), 0.0
        )

    # dp[c, j]: minimal SSE of uniq[0..j] split into c+1 contiguous clusters
    dp = np.full((m, d_count), np.inf)
    start = np.zeros((m, d_count), dtype=np.int64)
    dp[0, :] = np.maximum(cums2[1:] - cums[1:] * cums[1:] / cumw[1:], 0.0)
    for c in range(1, m):
        for j in range(c, d_count):
            i = np.arange(c, j + 1)
            cand = dp[c - 1, i - 1] + seg_cost(i, j)
            b = int(np.argmin(cand))  # first minimum: deterministic tie-break
            dp[c, j] = cand[b]
            start[c, j] = i[b]

    # backtrack cluster boundaries over distinct values
    bounds = np.empty(m + 1, dtype=np.int64)
    bounds[m] = d_count
    j = d_count - 1
    for c in range(m - 1, 0, -1):
        s0 = start[c, j]
        bounds[c] = s0
        j = s0 - 1
    bounds[0] = 0

    distinct_label = np.empty(d_count, dtype=np.int64)
    for c in range(m):
        distinct_label[bounds[c] : bounds[c + 1]] = c
    labels = distinct_label[np.searchsorted(uniq, arr)]

    # recompute per-cluster means/SSE from members: prefix sums can absorb
    # tiny values next to large ones, which would corrupt centroid ordering
    centroids = np.empty(m, dtype=np.float64)
    sse = 0.0
    for c in range(m):
        members = arr[labels == c]
        centroids[c] = float(members.mean())
        sse += float(np.sum((members - centroids[c]) ** 2))

    return Clustering1D(
        labels=labels,
        centroids=centroids,
        within_sse=sse,
        effective_k=m,
    )


def _mask_from_clustered_values(values: np.ndarray, k: int) -> MaskVector:
    clustering = kmeans_1d(values, k)
    if clustering.effective_k == 1:
        return MaskVector(np.ones(values.size))
    top = clustering.effective_k - 1
    return MaskVector((clustering.labels != top).astype(np.float64))


def build_cluster_mask(ep: FeatureVector, k: int) -> MaskVector:
    """Mask (zero) the elements of ``ep`` in the highest-means cluster.

    If clustering collapses to a single cluster (all values equal), nothing
    is masked and the mask is all-ones.
    """
    return _mask_from_clustered_values(ep.values, k)


def build_absdiff_mask(e1: FeatureVector, e2: FeatureVector, k: int) -> MaskVector:
    """Baseline: cluster |e1[i] - e2[i]| and mask the highest-means cluster."""
    if e1.dim != e2.dim:
        raise ValidationError(f"dimension mismatch: {e1.dim} vs {e2.dim}")
    return _mask_from_clustered_values(np.abs(e1.values - e2.values), k)


def build_top_fraction_mask(ep: FeatureVector, fraction: float) -> MaskVector:
    """Mask exactly round-half-up(fraction * d) of the largest-product elements."""
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction must be in [0, 1], got {fraction}")
    m_count = round_half_up(fraction * ep.dim)
    bits = np.ones(ep.dim)
    bits[top_m_indices(ep.values, m_count)] = 0.0
    return MaskVector(bits)


def build_random_mask(dim: int, fraction: float, rng: np.random.Generator) -> MaskVector:
    """Control baseline: mask a uniformly random subset of matched size."""
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction must be in [0, 1], got {fraction}")
    m_count = round_half_up(fraction * dim)
    bits = np.ones(dim)
    bits[rng.choice(dim, size=m_count, replace=False)] = 0.0
    return MaskVector(bits)


def mask_for_pair(
    strategy: MaskStrategy,
    e1: FeatureVector,
    e2: FeatureVector,
    rng: np.random.Generator | None = None,
) -> MaskVector:
    """Dispatch a strategy to its mask builder for one (image, text) pair."""
    if strategy.kind == "product-cluster":
        return build_cluster_mask(elementwise_product(e1, e2), strategy.k)
    if strategy.kind == "absdiff-cluster":
        return build_absdiff_mask(e1, e2, strategy.k)
    if strategy.kind == "top-fraction":
        return build_top_fraction_mask(elementwise_product(e1, e2), strategy.fraction)
    if rng is None:
        rng = np.random.default_rng(strategy.seed)
    return build_random_mask(e1.dim, strategy.fraction, rng)


def apply_mask(e1: FeatureVector, m: MaskVector) -> FeatureVector:
    """Element-wise product of a feature with a mask: masked slots become 0."""
    if e1.dim != m.dim:
        raise ValidationError(f"dimension mismatch: {e1.dim} vs {m.dim}")
    return FeatureVector(e1.values * m.bits)


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of exhaustively checking the top-product selection rule."""

    holds: bool
    best_subset_sum: float
    selected_sum: float
    tie_count: int


def verify_selection_dominance(
    e1: FeatureVector, e2: FeatureVector, m_count: int
) -> DominanceReport:
    """Check that top-m-by-product selection maximizes the removed dot-product mass.

    Enumerates every m_count-subset of indices and compares its product sum
    against the subset actually selected; ``holds`` means no subset is
    strictly better. Exhaustive enumeration is capped at d <= 20.
    """
    if e1.dim != e2.dim:
        raise ValidationError(f"dimension mismatch: {e1.dim} vs {e2.dim}")
    d = e1.dim
    if d > EXHAUSTIVE_DIM_LIMIT:
        raise CapacityError(
            f"exhaustive subset enumeration capped at d <= {EXHAUSTIVE_DIM_LIMIT}, got {d}"
        )
    if not 0 <= m_count <= d:
        raise ValidationError(f"m_count={m_count} out of range for d={d}")

    products = e1.values * e2.values
    selected = top_m_indices(products, m_count)
    selected_sum = math.fsum(products[selected])

    best = -math.inf
    tie_count = 0
    for subset in combinations(range(d), m_count):
        s = math.fsum(products[list(subset)])
        if s > best:
            best = s
            tie_count = 1
        elif s == best:
            tie_count += 1
    return DominanceReport(
        holds=best <= selected_sum,
        best_subset_sum=best,
        selected_sum=selected_sum,
        tie_count=tie_count,
    )
