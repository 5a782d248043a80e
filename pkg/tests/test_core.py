import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylemask import (
    EmbeddingSet,
    FeatureVector,
    FormatError,
    MaskVector,
    TruncationError,
    ValidationError,
    ZeroNormWarning,
    cosine_similarity,
    l2_normalize,
    load_embeddings,
    save_embeddings,
)
from stylemask.core import manifest_path

finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)
vectors = st.lists(finite_floats, min_size=1, max_size=16)


# ---------------------------------------------------------------------------
# vector types
# ---------------------------------------------------------------------------


def test_feature_vector_rejects_nan():
    with pytest.raises(ValidationError, match="index 1"):
        FeatureVector([1.0, float("nan")])


def test_feature_vector_rejects_empty():
    with pytest.raises(ValidationError):
        FeatureVector([])


def test_feature_vector_immutable():
    v = FeatureVector([1.0, 2.0])
    with pytest.raises(ValueError):
        v.values[0] = 3.0


def test_mask_vector_rejects_nonbinary():
    with pytest.raises(ValidationError):
        MaskVector([0.0, 0.5])


def test_embedding_set_rejects_duplicate_ids():
    v = FeatureVector([1.0])
    with pytest.raises(ValidationError, match="duplicate"):
        EmbeddingSet(1, (("a", v), ("a", v)))


def test_embedding_set_rejects_dim_mismatch():
    with pytest.raises(ValidationError):
        EmbeddingSet(2, (("a", FeatureVector([1.0])),))


# ---------------------------------------------------------------------------
# EMB1 + JSON fixture I/O
# ---------------------------------------------------------------------------


def test_load_minimal_emb1(tmp_path):
    payload = struct.pack("<4sHII", b"EMB1", 1, 2, 1) + struct.pack("<2f", 1.0, 0.0)
    path = tmp_path / "one.emb"
    path.write_bytes(payload)
    loaded = load_embeddings(path)
    assert loaded.count == 1 and loaded.dim == 2
    assert loaded.vectors()[0] == FeatureVector([1.0, 0.0])
    assert loaded.ids == ("row-0000",)


def test_load_json_fixture_zero_vector(tmp_path):
    path = tmp_path / "fix.json"
    path.write_text(json.dumps({"dim": 2, "vectors": [[0.0, 0.0]]}))
    loaded = load_embeddings(path)
    assert loaded.count == 1
    assert loaded.vectors()[0] == FeatureVector([0.0, 0.0])


def test_empty_set_writes_header_only_file(tmp_path):
    path = tmp_path / "empty.emb"
    save_embeddings(EmbeddingSet(4, ()), path)
    assert path.stat().st_size == 14
    loaded = load_embeddings(path)
    assert loaded.dim == 4 and loaded.count == 0


def test_payload_is_little_endian_float32(tmp_path):
    path = tmp_path / "two.emb"
    save_embeddings(EmbeddingSet.from_matrix([[1.5, -2.0]]), path)
    raw = path.read_bytes()
    assert raw[14:] == struct.pack("<2f", 1.5, -2.0)


def test_round_trip_random_set(tmp_path):
    rng = np.random.default_rng(7)
    # float32-representable values so narrowing is lossless
    mat = rng.standard_normal((100, 16)).astype(np.float32).astype(np.float64)
    original = EmbeddingSet.from_matrix(mat, metadata={"origin": "test"})
    path = tmp_path / "set.emb"
    save_embeddings(original, path)
    assert load_embeddings(path) == original


def test_round_trip_bytes_are_stable(tmp_path):
    # save(load(save(S))) must reproduce save(S) byte for byte
    rng = np.random.default_rng(11)
    original = EmbeddingSet.from_matrix(rng.standard_normal((5, 3)))
    first = tmp_path / "a.emb"
    second = tmp_path / "b.emb"
    save_embeddings(original, first)
    save_embeddings(load_embeddings(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_manifest_round_trips_ids_and_metadata(tmp_path):
    original = EmbeddingSet.from_matrix(
        [[1.0, 2.0], [3.0, 4.0]], ids=["styleA", "styleB"], metadata={"k": "v"}
    )
    path = tmp_path / "named.emb"
    save_embeddings(original, path)
    assert manifest_path(path).exists()
    assert load_embeddings(path) == original


def test_default_ids_skip_manifest(tmp_path):
    path = tmp_path / "plain.emb"
    save_embeddings(EmbeddingSet.from_matrix([[1.0]]), path)
    assert not manifest_path(path).exists()


def test_bad_magic_is_format_error(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(b"NOPE" + b"\x00" * 10)
    with pytest.raises(FormatError):
        load_embeddings(path)


def test_bad_version_is_format_error(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(struct.pack("<4sHII", b"EMB1", 9, 1, 0))
    with pytest.raises(FormatError, match="version"):
        load_embeddings(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "short.emb"
    path.write_bytes(struct.pack("<4sHII", b"EMB1", 1, 4, 2) + b"\x00" * 8)
    with pytest.raises(TruncationError):
        load_embeddings(path)


def test_nonfinite_payload_names_row_and_index(tmp_path):
    mat = np.array([[1.0, 2.0], [3.0, np.inf]], dtype="<f4")
    path = tmp_path / "inf.emb"
    path.write_bytes(struct.pack("<4sHII", b"EMB1", 1, 2, 2) + mat.tobytes())
    with pytest.raises(ValidationError, match=r"row 1, index 1"):
        load_embeddings(path)


def test_manifest_id_count_mismatch(tmp_path):
    path = tmp_path / "set.emb"
    save_embeddings(EmbeddingSet.from_matrix([[1.0], [2.0]]), path)
    manifest_path(path).write_text(json.dumps({"ids": ["only-one"]}))
    with pytest.raises(ValidationError, match="ids"):
        load_embeddings(path)


def test_float32_overflow_on_save_is_rejected(tmp_path):
    with pytest.raises(ValidationError, match="overflow"):
        save_embeddings(EmbeddingSet.from_matrix([[1e300]]), tmp_path / "big.emb")


# ---------------------------------------------------------------------------
# normalize / cosine
# ---------------------------------------------------------------------------


def test_l2_normalize_345():
    out = l2_normalize(FeatureVector([3.0, 4.0]))
    assert np.allclose(out.values, [0.6, 0.8], atol=1e-12)


def test_l2_normalize_zero_vector_flags():
    v = FeatureVector([0.0, 0.0])
    with pytest.warns(ZeroNormWarning):
        out = l2_normalize(v)
    assert out == v


def test_l2_normalize_norm_one_extended_precision():
    rng = np.random.default_rng(3)
    v = FeatureVector(rng.standard_normal(8))
    out = l2_normalize(v)
    # independent oracle: exact compensated sum of squares
    norm = math.sqrt(math.fsum(x * x for x in out.values))
    assert abs(norm - 1.0) < 1e-6


@given(vectors)
def test_l2_normalize_idempotent(values):
    v = FeatureVector(values)
    if float(np.linalg.norm(v.values)) == 0.0:
        return
    once = l2_normalize(v)
    twice = l2_normalize(once)
    assert np.allclose(once.values, twice.values, atol=1e-6)


def test_cosine_examples():
    a = FeatureVector([1.0, 0.0])
    b = FeatureVector([0.0, 1.0])
    assert cosine_similarity(a, a) == 1.0
    assert cosine_similarity(a, b) == 0.0
    assert cosine_similarity(FeatureVector([0.0, 0.0]), FeatureVector([1.0, 1.0])) == 0.0


def test_cosine_dim_mismatch():
    with pytest.raises(ValidationError):
        cosine_similarity(FeatureVector([1.0]), FeatureVector([1.0, 2.0]))


@settings(max_examples=100)
@given(vectors, st.floats(min_value=1e-3, max_value=1e3))
def test_cosine_symmetry_and_scale_invariance(values, scale):
    rng = np.random.default_rng(len(values))
    other = rng.standard_normal(len(values))
    a = FeatureVector(values)
    b = FeatureVector(other)
    assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(b, a), abs=1e-6)
    scaled = FeatureVector(np.asarray(values) * scale)
    assert cosine_similarity(scaled, b) == pytest.approx(
        cosine_similarity(a, b), abs=1e-6
    )
    if float(np.linalg.norm(a.values)) > 1e-6:
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-6)
