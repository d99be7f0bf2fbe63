import struct
import zlib
from pathlib import Path

import numpy as np
import pytest

from acsdx.errors import (
    MalformedModelError,
    ModelCapacityError,
    ModelCorruptionError,
    ModelFormatError,
    ModelVersionError,
    NotFittedError,
)
from acsdx.forest import ForestClassifier, Tree, trees_equal
from acsdx.model_io import (
    HEADER_SIZE,
    MAGIC,
    NODE_SIZE,
    decode_model,
    encode_model,
    model_digest,
)
from acsdx.simulate import generate_dataset
from helpers import hand_forest, leaf_tree, stump_tree

DATA = Path(__file__).parent / "data"

SINGLE_LEAF_DIGEST = "d662b0d1c8fa8efd1fe65a64e709cdaaad749728546c35de35e1733a2d4069aa"


def sealed(body: bytes) -> bytes:
    """Append the checksum a well-formed blob would carry."""
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def single_leaf_forest():
    return hand_forest([leaf_tree(1, 0)], n_features=5, max_depth=1, seed=0)


def three_node_forest():
    return hand_forest(
        [stump_tree(2, 600.5, left=(1, 3), right=(4, 1))],
        n_features=5,
        max_depth=1,
        seed=7,
    )


# --------------------------------------------------------------- goldens

def test_single_leaf_golden_bytes():
    blob = (DATA / "single_leaf.rfm").read_bytes()
    assert len(blob) == 39
    assert blob[:4] == MAGIC
    assert encode_model(single_leaf_forest()) == blob


def test_three_node_golden_bytes():
    blob = (DATA / "three_node.rfm").read_bytes()
    assert len(blob) == 71
    assert encode_model(three_node_forest()) == blob


def test_goldens_decode_to_the_source_forest():
    for path, forest in (
        ("single_leaf.rfm", single_leaf_forest()),
        ("three_node.rfm", three_node_forest()),
    ):
        loaded = decode_model((DATA / path).read_bytes())
        assert loaded.n_features_in_ == forest.n_features_in_
        assert loaded.seed == forest.seed
        assert loaded.max_depth == forest.max_depth
        assert len(loaded.trees_) == len(forest.trees_)
        assert all(trees_equal(a, b) for a, b in zip(loaded.trees_, forest.trees_))


def test_single_leaf_golden_digest():
    assert model_digest((DATA / "single_leaf.rfm").read_bytes()) == SINGLE_LEAF_DIGEST


# --------------------------------------------------------- blob geometry

def test_blob_length_is_header_trees_crc():
    ds = generate_dataset("motionless", seed=3, levels=(0.0, 50.0), rows_per_level=20)
    forest = ForestClassifier(n_trees=7, max_depth=5, seed=5).fit(ds.features(), ds.labels)
    blob = encode_model(forest)
    want = HEADER_SIZE + sum(2 + NODE_SIZE * len(t) for t in forest.trees_) + 4
    assert len(blob) == want
    # depth 5 caps a tree at 63 nodes
    assert len(blob) <= HEADER_SIZE + 7 * (2 + NODE_SIZE * 63) + 4


def test_encode_is_deterministic():
    forest = three_node_forest()
    assert encode_model(forest) == encode_model(forest)


def test_trained_forest_round_trips():
    ds = generate_dataset("motionless", seed=11)
    forest = ForestClassifier(n_trees=15, max_depth=4, seed=21).fit(
        ds.features(), ds.labels
    )
    loaded = decode_model(encode_model(forest))
    assert all(trees_equal(a, b) for a, b in zip(loaded.trees_, forest.trees_))
    assert loaded.n_trees == 15
    assert loaded.max_depth == 4
    assert loaded.seed == 21
    X = ds.features()
    assert np.array_equal(loaded.predict(X), forest.predict(X))
    assert np.array_equal(loaded.predict_proba(X), forest.predict_proba(X))


def test_encode_unfitted_raises():
    with pytest.raises(NotFittedError):
        encode_model(ForestClassifier())


# ------------------------------------------------------- framing errors

def test_decode_rejects_garbage():
    with pytest.raises(ModelFormatError):
        decode_model(b"")
    with pytest.raises(ModelFormatError):
        decode_model(b"RFM1")
    with pytest.raises(ModelFormatError):
        decode_model(b"X" * 40)


def test_decode_rejects_bit_flip():
    blob = bytearray((DATA / "three_node.rfm").read_bytes())
    blob[25] ^= 0x40
    with pytest.raises(ModelCorruptionError):
        decode_model(bytes(blob))


def test_decode_rejects_unknown_version():
    body = bytearray((DATA / "single_leaf.rfm").read_bytes()[:-4])
    body[4] = 2
    with pytest.raises(ModelVersionError):
        decode_model(sealed(bytes(body)))


def test_decode_rejects_trailing_bytes():
    body = (DATA / "single_leaf.rfm").read_bytes()[:-4] + b"\x00"
    with pytest.raises(ModelFormatError, match="trailing"):
        decode_model(sealed(body))


def test_decode_rejects_truncated_tree_table():
    # header promises two trees, body carries one
    body = bytearray((DATA / "single_leaf.rfm").read_bytes()[:-4])
    struct.pack_into("<H", body, 5, 2)
    with pytest.raises(ModelFormatError, match="truncated"):
        decode_model(sealed(bytes(body)))


def test_decode_rejects_truncated_nodes():
    # tree head promises two nodes, body carries one
    body = bytearray((DATA / "single_leaf.rfm").read_bytes()[:-4])
    struct.pack_into("<H", body, HEADER_SIZE, 2)
    with pytest.raises(ModelFormatError, match="truncated"):
        decode_model(sealed(bytes(body)))


# ----------------------------------------------------- structure errors

def _header(n_trees=1, n_features=5, max_depth=1, seed=0):
    return struct.pack("<4sBHBBQ", MAGIC, 1, n_trees, n_features, max_depth, seed)


def _leaf(pos, neg, feature=0xFF, left=0xFFFF, right=0xFFFF):
    head = struct.pack("<BBfHH", 1, feature, 0.0, left, right)
    return head + pos.to_bytes(3, "little") + neg.to_bytes(3, "little")


def _internal(feature, threshold, left, right, kind=0):
    return struct.pack("<BBfHH", kind, feature, threshold, left, right) + b"\x00" * 6


def test_decode_rejects_zero_trees():
    with pytest.raises(MalformedModelError, match="zero trees"):
        decode_model(sealed(_header(n_trees=0)))


def test_decode_rejects_zero_features():
    body = _header(n_features=0) + struct.pack("<H", 1) + _leaf(1, 0)
    with pytest.raises(MalformedModelError, match="zero features"):
        decode_model(sealed(body))


def test_decode_rejects_zero_depth():
    body = _header(max_depth=0) + struct.pack("<H", 1) + _leaf(1, 0)
    with pytest.raises(MalformedModelError, match="zero max_depth"):
        decode_model(sealed(body))


def test_decode_rejects_zero_node_tree():
    body = _header() + struct.pack("<H", 0)
    with pytest.raises(MalformedModelError, match="zero nodes"):
        decode_model(sealed(body))


def test_decode_rejects_leaf_with_routing_fields():
    body = _header() + struct.pack("<H", 1) + _leaf(1, 0, feature=3)
    with pytest.raises(MalformedModelError, match="routing"):
        decode_model(sealed(body))


def test_decode_rejects_empty_leaf_counts():
    body = _header() + struct.pack("<H", 1) + _leaf(0, 0)
    with pytest.raises(MalformedModelError, match="class counts"):
        decode_model(sealed(body))


def test_decode_rejects_out_of_range_feature():
    body = _header() + struct.pack("<H", 1) + _internal(5, 1.0, 0xFFFF, 0xFFFF)
    with pytest.raises(MalformedModelError, match="feature 5"):
        decode_model(sealed(body))


def test_decode_rejects_bad_child_index():
    # a child may never point at or before its parent
    body = _header() + struct.pack("<H", 1) + _internal(0, 1.0, 0, 0)
    with pytest.raises(MalformedModelError, match="child index"):
        decode_model(sealed(body))


def test_decode_rejects_unknown_node_kind():
    body = _header() + struct.pack("<H", 1) + _internal(0, 1.0, 0xFFFF, 0xFFFF, kind=2)
    with pytest.raises(MalformedModelError, match="kind 2"):
        decode_model(sealed(body))


def test_decode_rejects_tree_deeper_than_declared():
    nodes = (
        _internal(0, 1.0, 1, 2)
        + _internal(0, 0.5, 3, 4)
        + _leaf(1, 0)
        + _leaf(1, 0)
        + _leaf(0, 1)
    )
    body = _header(max_depth=1) + struct.pack("<H", 5) + nodes
    with pytest.raises(MalformedModelError, match="deeper"):
        decode_model(sealed(body))


# ------------------------------------------------------- capacity limits

def test_count_saturation_warns_and_clamps():
    forest = hand_forest([leaf_tree(2**24, 1)], max_depth=1)
    with pytest.warns(UserWarning, match="saturates"):
        blob = encode_model(forest)
    loaded = decode_model(blob)
    assert int(loaded.trees_[0].pos[0]) == 2**24 - 1
    assert int(loaded.trees_[0].neg[0]) == 1


def test_encode_capacity_checks():
    with pytest.raises(ModelCapacityError):
        encode_model(hand_forest([]))
    with pytest.raises(ModelCapacityError):
        encode_model(hand_forest([leaf_tree(1, 0)], n_features=300))
    with pytest.raises(ModelCapacityError):
        encode_model(hand_forest([leaf_tree(1, 0)], max_depth=0))
    with pytest.raises(ModelCapacityError):
        encode_model(hand_forest([leaf_tree(1, 0)], max_depth=256))
    with pytest.raises(ModelCapacityError):
        encode_model(hand_forest([leaf_tree(1, 0)], seed=-1))


def test_encode_rejects_oversized_tree():
    n = 70_000
    big = Tree(
        is_leaf=np.ones(n, dtype=bool),
        feature=np.full(n, -1, dtype=np.int16),
        threshold=np.zeros(n, dtype=np.float32),
        left=np.full(n, -1, dtype=np.int32),
        right=np.full(n, -1, dtype=np.int32),
        pos=np.ones(n, dtype=np.int64),
        neg=np.zeros(n, dtype=np.int64),
    )
    with pytest.raises(ModelCapacityError, match="nodes"):
        encode_model(hand_forest([big], max_depth=1))


# ---------------------------------------------------------------- digest

def test_digest_shape_and_stability():
    blob = encode_model(three_node_forest())
    digest = model_digest(blob)
    assert len(digest) == 64
    assert digest == digest.lower()
    assert set(digest) <= set("0123456789abcdef")
    assert model_digest(blob) == digest
    assert model_digest(encode_model(single_leaf_forest())) != digest


def test_digest_validates_before_hashing():
    with pytest.raises(ModelFormatError):
        model_digest(b"not a model")
    blob = bytearray(encode_model(single_leaf_forest()))
    blob[-1] ^= 1
    with pytest.raises(ModelCorruptionError):
        model_digest(bytes(blob))
