import numpy as np
import pytest

from stylemask import EvalItem, FeatureVector

# d=6 pair used across masking, CLI, and acceptance tests
GOLDEN_E1 = [0.9, -0.2, 0.5, 0.1, -0.7, 0.3]
GOLDEN_E2 = [0.8, 0.1, 0.6, -0.4, 0.2, 0.9]
GOLDEN_MASK = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0]
GOLDEN_MASKED = [0.0, -0.2, 0.0, 0.1, -0.7, 0.0]


@pytest.fixture
def golden_pair():
    return FeatureVector(GOLDEN_E1), FeatureVector(GOLDEN_E2)


def make_hand_corpus():
    """Four items with e1=[1,0], e2=[1,0], e3=[0,1]: fidelity 1/2, leakage 0.65."""
    e1 = FeatureVector([1.0, 0.0])
    e2 = FeatureVector([1.0, 0.0])
    e3 = FeatureVector([0.0, 1.0])
    generated = [
        FeatureVector([0.0, 1.0]),   # correct, leakage 0
        FeatureVector([1.0, 0.0]),   # misclassified, leakage 1
        FeatureVector([0.6, 0.8]),   # correct, leakage 0.6
        FeatureVector([0.8, 0.6]),   # misclassified, leakage 1
    ]
    return [EvalItem(e_g=g, e1=e1, e2=e2, e3=e3) for g in generated]


@pytest.fixture
def hand_corpus():
    return make_hand_corpus()


def f32(values):
    """Narrow to float32 the way the binary container does, back as float64."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)
