import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemask import (
    CapacityError,
    DegenerateClusterWarning,
    FeatureVector,
    MaskStrategy,
    MaskVector,
    ValidationError,
    apply_mask,
    build_absdiff_mask,
    build_cluster_mask,
    build_top_fraction_mask,
    elementwise_product,
    kmeans_1d,
    verify_selection_dominance,
)
from stylemask.masking import build_random_mask, round_half_up

from conftest import GOLDEN_MASK, GOLDEN_MASKED

value_lists = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=1, max_size=12
)


def brute_force_sse(values, k):
    """Minimum within-SSE over all contiguous partitions of the sorted values."""
    sv = np.sort(np.asarray(values, dtype=np.float64))
    n = sv.size
    m = min(k, int(np.unique(sv).size))

    def seg_sse(seg):
        return float(np.sum((seg - seg.mean()) ** 2))

    best = math.inf
    for bounds in combinations(range(1, n), m - 1):
        cuts = (0,) + bounds + (n,)
        total = sum(seg_sse(sv[cuts[i] : cuts[i + 1]]) for i in range(m))
        best = min(best, total)
    return best, m


def sse_from_labels(values, labels):
    values = np.asarray(values, dtype=np.float64)
    total = 0.0
    for lab in np.unique(labels):
        seg = values[labels == lab]
        total += float(np.sum((seg - seg.mean()) ** 2))
    return total


# ---------------------------------------------------------------------------
# elementwise product
# ---------------------------------------------------------------------------


def test_product_examples():
    out = elementwise_product(FeatureVector([1, 2, 3]), FeatureVector([0, 1, 2]))
    assert np.array_equal(out.values, [0, 2, 6])
    zeros = elementwise_product(FeatureVector([5, -2]), FeatureVector([0, 0]))
    assert np.array_equal(zeros.values, [0, 0])


def test_product_matches_scalar_loop():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal(32), rng.standard_normal(32)
    out = elementwise_product(FeatureVector(a), FeatureVector(b))
    for i in range(32):
        assert out.values[i] == a[i] * b[i]


def test_product_dim_mismatch():
    with pytest.raises(ValidationError):
        elementwise_product(FeatureVector([1]), FeatureVector([1, 2]))


# ---------------------------------------------------------------------------
# exact 1-D k-means
# ---------------------------------------------------------------------------


def test_kmeans_two_point_clusters():
    cl = kmeans_1d([0, 0, 10, 10], 2)
    assert cl.labels.tolist() == [0, 0, 1, 1]
    assert cl.centroids.tolist() == [0.0, 10.0]
    assert cl.within_sse == 0.0
    assert cl.effective_k == 2


def test_kmeans_single_cluster_mean():
    cl = kmeans_1d([1, 2, 3], 1)
    assert cl.centroids.tolist() == [2.0]
    assert cl.within_sse == pytest.approx(2.0, abs=1e-12)


def test_kmeans_derived_split():
    cl = kmeans_1d([1, 2, 3, 10, 11, 12], 2)
    expected, _ = brute_force_sse([1, 2, 3, 10, 11, 12], 2)
    assert expected == pytest.approx(4.0, abs=1e-12)
    assert cl.within_sse == pytest.approx(expected, abs=1e-9)
    assert cl.labels.tolist() == [0, 0, 0, 1, 1, 1]


def test_kmeans_validation():
    with pytest.raises(ValidationError):
        kmeans_1d([], 2)
    with pytest.raises(ValidationError):
        kmeans_1d([1.0], 0)
    with pytest.raises(ValidationError):
        kmeans_1d([1.0, float("inf")], 1)


def test_kmeans_collapses_on_few_distinct_values():
    with pytest.warns(DegenerateClusterWarning):
        cl = kmeans_1d([5.0, 5.0, 5.0], 2)
    assert cl.effective_k == 1
    assert cl.centroids.tolist() == [5.0]


@settings(max_examples=150, deadline=None)
@given(value_lists, st.integers(min_value=1, max_value=4))
def test_kmeans_matches_brute_force(values, k):
    cl = kmeans_1d(values, k)
    expected, m = brute_force_sse(values, k)
    assert cl.effective_k == m
    assert cl.within_sse == pytest.approx(expected, abs=1e-9)
    # the returned labels must themselves achieve the optimum
    assert sse_from_labels(values, cl.labels) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.integers(min_value=1, max_value=4))
def test_kmeans_contiguity(values, k):
    cl = kmeans_1d(values, k)
    order = np.argsort(np.asarray(values, dtype=np.float64), kind="stable")
    sorted_labels = cl.labels[order]
    assert all(
        sorted_labels[i] <= sorted_labels[i + 1] for i in range(len(values) - 1)
    )
    assert np.all(np.diff(cl.centroids) > 0)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.integers(min_value=2, max_value=4), st.randoms())
def test_cluster_mask_permutation_equivariance(values, k, rnd):
    ep = FeatureVector(values)
    perm = list(range(len(values)))
    rnd.shuffle(perm)
    permuted = FeatureVector(np.asarray(values)[perm])
    direct = build_cluster_mask(permuted, k).bits
    rearranged = build_cluster_mask(ep, k).bits[perm]
    assert np.array_equal(direct, rearranged)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.integers(min_value=2, max_value=4),
       st.integers(min_value=-30, max_value=30))
def test_cluster_mask_scale_invariance_binary_scales(values, k, exponent):
    # power-of-two scales change every float exactly, so even adversarial
    # near-tie inputs must produce the identical partition
    base = build_cluster_mask(FeatureVector(values), k)
    scaled = build_cluster_mask(FeatureVector(np.asarray(values) * 2.0**exponent), k)
    assert base == scaled


def test_cluster_mask_scale_invariance_arbitrary_lambda():
    rng = np.random.default_rng(44)
    for _ in range(30):
        values = rng.standard_normal(int(rng.integers(2, 16)))
        lam = float(rng.uniform(1e-3, 1e3))
        k = int(rng.integers(2, 5))
        base = build_cluster_mask(FeatureVector(values), k)
        scaled = build_cluster_mask(FeatureVector(values * lam), k)
        assert base == scaled


# ---------------------------------------------------------------------------
# mask builders
# ---------------------------------------------------------------------------


def test_cluster_mask_two_group_split():
    mask = build_cluster_mask(FeatureVector([0.1, 5.0, 0.2, 4.8]), 2)
    assert mask.bits.tolist() == [1, 0, 1, 0]


def test_cluster_mask_degenerate_all_equal():
    with pytest.warns(DegenerateClusterWarning):
        mask = build_cluster_mask(FeatureVector([1.0, 1.0, 1.0]), 2)
    assert mask.bits.tolist() == [1, 1, 1]


def test_cluster_mask_golden_fixture(golden_pair):
    e1, e2 = golden_pair
    ep = elementwise_product(e1, e2)
    assert np.allclose(
        ep.values, [0.72, -0.02, 0.30, -0.04, -0.14, 0.27], atol=1e-12
    )
    mask = build_cluster_mask(ep, 2)
    assert mask.bits.tolist() == GOLDEN_MASK


def test_absdiff_mask_examples():
    mask = build_absdiff_mask(FeatureVector([0, 0, 10]), FeatureVector([0, 0, 0]), 2)
    assert mask.bits.tolist() == [1, 1, 0]
    same = FeatureVector([1.0, 2.0, 3.0])
    with pytest.warns(DegenerateClusterWarning):
        mask = build_absdiff_mask(same, same, 2)
    assert mask.bits.tolist() == [1, 1, 1]


def test_absdiff_mask_matches_contiguous_split_oracle():
    rng = np.random.default_rng(5)
    e1 = FeatureVector(rng.standard_normal(12))
    e2 = FeatureVector(rng.standard_normal(12))
    mask = build_absdiff_mask(e1, e2, 2)
    diffs = np.abs(e1.values - e2.values)
    # oracle: best contiguous split of sorted |diff|; masked = top cluster
    sv = np.sort(diffs)
    best_cut, best = None, math.inf
    for cut in range(1, 12):
        lo, hi = sv[:cut], sv[cut:]
        sse = np.sum((lo - lo.mean()) ** 2) + np.sum((hi - hi.mean()) ** 2)
        if sse < best:
            best, best_cut = sse, cut
    threshold = sv[best_cut]
    assert set(mask.masked_indices()) == set(np.flatnonzero(diffs >= threshold))


def test_top_fraction_mask_counts():
    rng = np.random.default_rng(9)
    ep = FeatureVector(rng.standard_normal(10))
    mask = build_top_fraction_mask(ep, 0.2)
    assert mask.masked_count == 2
    top2 = set(np.argsort(-ep.values)[:2])
    assert set(mask.masked_indices()) == top2

    assert build_top_fraction_mask(ep, 0.0).masked_count == 0
    assert build_top_fraction_mask(ep, 1.0).masked_count == 10


def test_top_fraction_tie_breaks_to_lower_index():
    mask = build_top_fraction_mask(FeatureVector([5.0, 5.0, 1.0]), 1 / 3)
    assert mask.bits.tolist() == [0, 1, 1]


def test_top_fraction_rejects_bad_fraction():
    with pytest.raises(ValidationError):
        build_top_fraction_mask(FeatureVector([1.0]), 1.5)


@settings(max_examples=100, deadline=None)
@given(value_lists, st.floats(min_value=0, max_value=1))
def test_top_fraction_arity(values, fraction):
    mask = build_top_fraction_mask(FeatureVector(values), fraction)
    assert mask.masked_count == round_half_up(fraction * len(values))


def test_random_mask_is_seeded_and_sized():
    rng = np.random.default_rng(4)
    a = build_random_mask(20, 0.3, np.random.default_rng(4))
    b = build_random_mask(20, 0.3, np.random.default_rng(4))
    assert a == b
    assert a.masked_count == 6
    assert rng is not None


def test_mask_strategy_validation():
    with pytest.raises(ValidationError):
        MaskStrategy(kind="nonsense")
    with pytest.raises(ValidationError):
        MaskStrategy(kind="top-fraction", fraction=None)
    with pytest.raises(ValidationError):
        MaskStrategy(kind="random", fraction=0.5, seed=None)
    MaskStrategy(kind="product-cluster", k=2)


# ---------------------------------------------------------------------------
# apply_mask
# ---------------------------------------------------------------------------


def test_apply_mask_examples():
    v = FeatureVector([4, 5, 6])
    assert apply_mask(v, MaskVector([1, 1, 1])) == v
    assert apply_mask(v, MaskVector([0, 0, 0])) == FeatureVector([0, 0, 0])


def test_apply_mask_golden(golden_pair):
    e1, _ = golden_pair
    out = apply_mask(e1, MaskVector(GOLDEN_MASK))
    assert out.values.tolist() == GOLDEN_MASKED


@given(value_lists)
def test_apply_mask_idempotent(values):
    rng = np.random.default_rng(len(values))
    mask = MaskVector(rng.integers(0, 2, size=len(values)).astype(float))
    v = FeatureVector(values)
    once = apply_mask(v, mask)
    assert apply_mask(once, mask) == once


# ---------------------------------------------------------------------------
# selection dominance
# ---------------------------------------------------------------------------


def test_dominance_full_selection_trivial():
    rng = np.random.default_rng(1)
    e1 = FeatureVector(rng.standard_normal(6))
    e2 = FeatureVector(rng.standard_normal(6))
    rep = verify_selection_dominance(e1, e2, 6)
    assert rep.holds and rep.tie_count == 1
    assert rep.selected_sum == pytest.approx(float(np.sum(e1.values * e2.values)))


def test_dominance_zero_text_feature_total_tie():
    e1 = FeatureVector(np.arange(1.0, 6.0))
    e2 = FeatureVector(np.zeros(5))
    rep = verify_selection_dominance(e1, e2, 2)
    assert rep.holds
    assert rep.tie_count == math.comb(5, 2)
    assert rep.best_subset_sum == 0.0


def test_dominance_random_pair_seed_42():
    rng = np.random.default_rng(42)
    e1 = FeatureVector(rng.standard_normal(10))
    e2 = FeatureVector(rng.standard_normal(10))
    rep = verify_selection_dominance(e1, e2, 3)
    assert rep.holds
    # independently recompute the best over all 120 subsets
    products = e1.values * e2.values
    best = max(
        math.fsum(products[list(s)]) for s in combinations(range(10), 3)
    )
    assert rep.best_subset_sum == best
    assert rep.selected_sum == best


def test_dominance_capacity_cap():
    v = FeatureVector(np.ones(21))
    with pytest.raises(CapacityError):
        verify_selection_dominance(v, v, 3)


def test_dominance_m_count_range():
    v = FeatureVector([1.0, 2.0])
    with pytest.raises(ValidationError):
        verify_selection_dominance(v, v, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=2**32 - 1))
def test_dominance_holds_exhaustively(d, seed):
    rng = np.random.default_rng(seed)
    e1 = FeatureVector(rng.standard_normal(d))
    e2 = FeatureVector(rng.standard_normal(d))
    for m_count in range(d + 1):
        assert verify_selection_dominance(e1, e2, m_count).holds


def test_dominance_at_dim_16_bound():
    # one full d=16 sweep: 2^16 subsets in total across all m_counts
    rng = np.random.default_rng(160)
    e1 = FeatureVector(rng.standard_normal(16))
    e2 = FeatureVector(rng.standard_normal(16))
    for m_count in range(17):
        assert verify_selection_dominance(e1, e2, m_count).holds
