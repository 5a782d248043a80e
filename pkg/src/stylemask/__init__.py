"""Embedding-space content/style disentanglement toolkit.

Works entirely on precomputed embedding vectors: selects content-correlated
feature elements by clustering element-wise products, masks them, scores the
result with energy and leakage metrics, and verifies the underlying
inequalities exactly on small discrete instances.
"""

__version__ = "0.1.0"

from .core import (
    EmbeddingSet,
    FeatureVector,
    MaskVector,
    cosine_similarity,
    l2_normalize,
    load_embeddings,
    save_embeddings,
)
from .energy import distance_energy, free_energy, residual_content_energy
from .errors import (
    CapacityError,
    DegenerateClusterWarning,
    FormatError,
    StylemaskError,
    TruncationError,
    ValidationError,
    ZeroNormWarning,
)
from .harness import (
    EnergyReport,
    KSweepEntry,
    SweepConfig,
    energy_sweep,
    evaluate_corpus,
    k_sweep,
    percentiles,
    synthetic_pair_corpus,
)
from .masking import (
    Clustering1D,
    DominanceReport,
    MaskStrategy,
    apply_mask,
    build_absdiff_mask,
    build_cluster_mask,
    build_top_fraction_mask,
    elementwise_product,
    kmeans_1d,
    verify_selection_dominance,
)
from .metrics import (
    EvalItem,
    MetricsReport,
    alignment_scores,
    classify_item,
    fidelity_score,
    leakage_score,
    style_score,
)
from .theory import (
    AdapterInstance,
    DiscreteJoint,
    FrozenReadout,
    MaskedConditioningInstance,
    TheoremReport,
    expected_divergence,
    kl_divergence,
    optimal_restricted_model,
    random_adapter_instance,
    random_instance,
    random_masked_instance,
    verify_adapter_superiority,
    verify_masked_conditioning,
)

__all__ = [
    "__version__",
    "EmbeddingSet",
    "FeatureVector",
    "MaskVector",
    "cosine_similarity",
    "l2_normalize",
    "load_embeddings",
    "save_embeddings",
    "distance_energy",
    "free_energy",
    "residual_content_energy",
    "StylemaskError",
    "ValidationError",
    "FormatError",
    "TruncationError",
    "CapacityError",
    "ZeroNormWarning",
    "DegenerateClusterWarning",
    "EnergyReport",
    "KSweepEntry",
    "SweepConfig",
    "energy_sweep",
    "evaluate_corpus",
    "k_sweep",
    "percentiles",
    "synthetic_pair_corpus",
    "Clustering1D",
    "DominanceReport",
    "MaskStrategy",
    "apply_mask",
    "build_absdiff_mask",
    "build_cluster_mask",
    "build_top_fraction_mask",
    "elementwise_product",
    "kmeans_1d",
    "verify_selection_dominance",
    "EvalItem",
    "MetricsReport",
    "alignment_scores",
    "classify_item",
    "fidelity_score",
    "leakage_score",
    "style_score",
    "AdapterInstance",
    "DiscreteJoint",
    "FrozenReadout",
    "MaskedConditioningInstance",
    "TheoremReport",
    "expected_divergence",
    "kl_divergence",
    "optimal_restricted_model",
    "random_adapter_instance",
    "random_instance",
    "random_masked_instance",
    "verify_adapter_superiority",
    "verify_masked_conditioning",
]
