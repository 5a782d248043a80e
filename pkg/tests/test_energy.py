import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemask import (
    FeatureVector,
    ValidationError,
    distance_energy,
    free_energy,
    residual_content_energy,
)
from stylemask.masking import round_half_up, top_m_indices

logit_lists = st.lists(
    st.floats(min_value=-50, max_value=50, allow_nan=False), min_size=1, max_size=12
)


def direct_free_energy(v, t=1.0):
    """Oracle: plain summation without the max-shift rearrangement."""
    return -t * math.log(math.fsum(math.exp(x / t) for x in v))


def test_free_energy_single_zero():
    assert free_energy([0.0]) == 0.0


def test_free_energy_two_zeros():
    assert free_energy([0.0, 0.0]) == pytest.approx(-math.log(2), abs=1e-12)


def test_free_energy_derived_value():
    assert free_energy([1.0, 2.0]) == pytest.approx(
        direct_free_energy([1.0, 2.0]), abs=1e-12
    )
    assert free_energy([1.0, 2.0]) == pytest.approx(-2.313262, abs=1e-6)


def test_free_energy_validation():
    with pytest.raises(ValidationError):
        free_energy([])
    with pytest.raises(ValidationError):
        free_energy([1.0], temperature=0.0)
    with pytest.raises(ValidationError):
        free_energy([float("nan")])


def test_free_energy_handles_large_logits():
    # would overflow without the max shift
    out = free_energy([1000.0, 999.0])
    assert out == pytest.approx(-1000.0 - math.log(1 + math.exp(-1.0)), abs=1e-9)


@settings(max_examples=100)
@given(logit_lists, st.floats(min_value=-20, max_value=20, allow_nan=False))
def test_free_energy_shift_identity(v, delta):
    shifted = [x + delta for x in v]
    assert free_energy(shifted) == pytest.approx(free_energy(v) - delta, abs=1e-9)


@settings(max_examples=100)
@given(
    st.lists(
        st.floats(min_value=-30, max_value=30, allow_nan=False),
        min_size=1,
        max_size=12,
    ),
    st.floats(min_value=0.1, max_value=10.0),
)
def test_free_energy_matches_direct_sum(v, t):
    # domain kept where the shift-free oracle cannot overflow
    assert free_energy(v, t) == pytest.approx(direct_free_energy(v, t), abs=1e-9)


def test_single_logit_increase_strictly_decreases_energy():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(6)
    for i in range(6):
        bumped = v.copy()
        bumped[i] += 0.5
        assert free_energy(bumped) < free_energy(v) + 1e-12


def test_zeroing_logits_moves_energy_by_sign():
    base = [2.0, -1.0, 0.5]
    for i, x in enumerate(base):
        zeroed = list(base)
        zeroed[i] = 0.0
        if x > 0:
            assert free_energy(zeroed) > free_energy(base)
        else:
            assert free_energy(zeroed) < free_energy(base)


def test_residual_energy_all_masked():
    out = residual_content_energy(
        FeatureVector([0.0, 0.0]), FeatureVector([3.0, -7.0])
    )
    assert out == pytest.approx(-math.log(2), abs=1e-12)


def test_residual_energy_partial_mask():
    out = residual_content_energy(FeatureVector([1.0, 0.0]), FeatureVector([2.0, 5.0]))
    assert out == pytest.approx(direct_free_energy([2.0, 0.0]), abs=1e-12)
    assert out == pytest.approx(-2.126928, abs=1e-6)


def test_residual_energy_masking_positive_logit_increases():
    # logits [2, 0] -> mask index 0 -> logits [0, 0]
    before = residual_content_energy(FeatureVector([1.0, 0.0]), FeatureVector([2.0, 5.0]))
    after = residual_content_energy(FeatureVector([0.0, 0.0]), FeatureVector([2.0, 5.0]))
    assert before == pytest.approx(-2.126928, abs=1e-6)
    assert after == pytest.approx(-math.log(2), abs=1e-12)
    assert after > before


def test_residual_energy_dim_mismatch():
    with pytest.raises(ValidationError):
        residual_content_energy(FeatureVector([1.0]), FeatureVector([1.0, 2.0]))


def test_distance_energy_examples():
    v = FeatureVector([2.0, 1.0])
    assert distance_energy(v, v) == pytest.approx(0.0, abs=1e-12)
    assert distance_energy(FeatureVector([1, 0]), FeatureVector([0, 1])) == 1.0
    assert distance_energy(FeatureVector([1, 0]), FeatureVector([-1, 0])) == 2.0


def _strategy_energies(e1, e2, proportion):
    """(product-masked energy, absdiff-masked energy, selections differ?)"""
    d = e1.size
    m = round_half_up(proportion * d)
    prod_idx = top_m_indices(e1 * e2, m)
    diff_idx = top_m_indices(np.abs(e1 - e2), m)
    masked_prod = e1.copy()
    masked_prod[prod_idx] = 0.0
    masked_diff = e1.copy()
    masked_diff[diff_idx] = 0.0
    return (
        residual_content_energy(FeatureVector(masked_prod), FeatureVector(e2)),
        residual_content_energy(FeatureVector(masked_diff), FeatureVector(e2)),
        set(prod_idx.tolist()) != set(diff_idx.tolist()),
    )


def test_energy_ordering_product_dominates_absdiff():
    # removing the largest products removes the largest exp terms, so the
    # product strategy can never land below the absdiff baseline
    rng = np.random.default_rng(17)
    proportions = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    differ_seen = 0
    for _ in range(40):
        d = int(rng.integers(4, 17))
        e1 = rng.standard_normal(d)
        e2 = rng.standard_normal(d)
        for p in proportions:
            prod_e, diff_e, differ = _strategy_energies(e1, e2, p)
            assert prod_e >= diff_e
            if differ:
                differ_seen += 1
                assert prod_e > diff_e
    assert differ_seen > 100  # the comparison is not vacuous
