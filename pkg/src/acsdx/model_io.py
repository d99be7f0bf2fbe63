"""Binary model blob (.rfm): a self-checking flat serialization of a forest.

Layout, all integers little-endian:

    header   magic "RFM1" | version u8 | n_trees u16 | n_features u8
             | max_depth u8 | seed u64                          (17 octets)
    per tree node_count u16, then node_count nodes in preorder
    node     kind u8 (0 internal, 1 leaf) | feature u8 | threshold f32
             | left u16 | right u16 | pos u24 | neg u24         (16 octets)
    trailer  CRC-32 (zlib polynomial, standard parameters) u32
             over every preceding octet

Leaves store feature 0xFF, threshold 0.0, children 0xFFFF and the class
counts; internal nodes store zero counts. Counts saturate at 2^24 - 1 with a
warning. Thresholds are quantized to float32 during training, so encoding is
lossless by construction and decode(encode(f)) reproduces the forest exactly.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
import zlib

import numpy as np

from .errors import (
    MalformedModelError,
    ModelCapacityError,
    ModelCorruptionError,
    ModelFormatError,
    ModelVersionError,
)
from .forest import ForestClassifier, Tree
from .validation import check_is_fitted

MAGIC = b"RFM1"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sBHBBQ")
_NODE_HEAD = struct.Struct("<BBfHH")
_TREE_HEAD = struct.Struct("<H")
_CRC = struct.Struct("<I")

_KIND_INTERNAL = 0
_KIND_LEAF = 1
_LEAF_FEATURE = 0xFF
_LEAF_CHILD = 0xFFFF
_COUNT_CAP = (1 << 24) - 1

NODE_SIZE = _NODE_HEAD.size + 6  # 16
HEADER_SIZE = _HEADER.size       # 17


def _u24(value: int) -> bytes:
    if value > _COUNT_CAP:
        warnings.warn(
            f"class count {value} saturates the 24-bit wire field", stacklevel=3
        )
        value = _COUNT_CAP
    return bytes((value & 0xFF, (value >> 8) & 0xFF, (value >> 16) & 0xFF))


def encode_model(forest: ForestClassifier) -> bytes:
    """Serialize a fitted forest. The .rfm file is exactly these bytes."""
    check_is_fitted(forest, "trees_")
    n_trees = len(forest.trees_)
    if not 1 <= n_trees <= 0xFFFF:
        raise ModelCapacityError(f"n_trees {n_trees} outside the u16 field")
    if not 1 <= forest.n_features_in_ <= 0xFE:
        raise ModelCapacityError("feature count outside the u8 field")
    if not 1 <= forest.max_depth <= 0xFF:
        raise ModelCapacityError("max_depth outside the u8 field")
    if not 0 <= forest.seed < 2**64:
        raise ModelCapacityError("seed outside the u64 field")

    out = bytearray(
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            n_trees,
            forest.n_features_in_,
            forest.max_depth,
            forest.seed,
        )
    )
    for tree in forest.trees_:
        n = len(tree)
        if not 1 <= n <= 0xFFFF:
            raise ModelCapacityError(f"tree with {n} nodes outside the u16 field")
        out += _TREE_HEAD.pack(n)
        for i in range(n):
            if tree.is_leaf[i]:
                out += _NODE_HEAD.pack(
                    _KIND_LEAF, _LEAF_FEATURE, 0.0, _LEAF_CHILD, _LEAF_CHILD
                )
                out += _u24(int(tree.pos[i]))
                out += _u24(int(tree.neg[i]))
            else:
                out += _NODE_HEAD.pack(
                    _KIND_INTERNAL,
                    int(tree.feature[i]),
                    float(tree.threshold[i]),
                    int(tree.left[i]),
                    int(tree.right[i]),
                )
                out += b"\x00\x00\x00\x00\x00\x00"
    out += _CRC.pack(zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def _check_frame(blob: bytes) -> None:
    if len(blob) < HEADER_SIZE + _CRC.size:
        raise ModelFormatError("blob too short to be a model")
    if blob[:4] != MAGIC:
        raise ModelFormatError("bad magic, not a model blob")
    version = blob[4]
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported format version {version}")
    (stored,) = _CRC.unpack(blob[-4:])
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored:
        raise ModelCorruptionError("checksum mismatch, blob is damaged")


def decode_model(blob: bytes) -> ForestClassifier:
    """Parse and validate a model blob back into a fitted forest."""
    _check_frame(blob)
    _, _, n_trees, n_features, max_depth, seed = _HEADER.unpack_from(blob, 0)
    if n_trees < 1:
        raise MalformedModelError("model declares zero trees")
    if n_features < 1:
        raise MalformedModelError("model declares zero features")
    if max_depth < 1:
        raise MalformedModelError("model declares zero max_depth")

    pos_end = len(blob) - _CRC.size
    offset = HEADER_SIZE
    trees = []
    for _ in range(n_trees):
        if offset + _TREE_HEAD.size > pos_end:
            raise ModelFormatError("truncated tree table")
        (n_nodes,) = _TREE_HEAD.unpack_from(blob, offset)
        offset += _TREE_HEAD.size
        if n_nodes < 1:
            raise MalformedModelError("tree with zero nodes")
        if offset + n_nodes * NODE_SIZE > pos_end:
            raise ModelFormatError("truncated node records")
        is_leaf = np.empty(n_nodes, dtype=bool)
        feature = np.empty(n_nodes, dtype=np.int16)
        threshold = np.empty(n_nodes, dtype=np.float32)
        left = np.empty(n_nodes, dtype=np.int32)
        right = np.empty(n_nodes, dtype=np.int32)
        pos = np.empty(n_nodes, dtype=np.int64)
        neg = np.empty(n_nodes, dtype=np.int64)
        for i in range(n_nodes):
            kind, feat, thr, lft, rgt = _NODE_HEAD.unpack_from(blob, offset)
            offset += _NODE_HEAD.size
            p = int.from_bytes(blob[offset : offset + 3], "little")
            q = int.from_bytes(blob[offset + 3 : offset + 6], "little")
            offset += 6
            if kind == _KIND_LEAF:
                if feat != _LEAF_FEATURE or lft != _LEAF_CHILD or rgt != _LEAF_CHILD:
                    raise MalformedModelError(f"leaf node {i} with routing fields set")
                if p + q < 1:
                    raise MalformedModelError(f"leaf node {i} with empty class counts")
                is_leaf[i] = True
                feature[i] = -1
                threshold[i] = 0.0
                left[i] = -1
                right[i] = -1
            elif kind == _KIND_INTERNAL:
                if feat >= n_features:
                    raise MalformedModelError(f"node {i} references feature {feat}")
                if not (i < lft < n_nodes) or not (i < rgt < n_nodes):
                    raise MalformedModelError(f"node {i} child index out of range")
                is_leaf[i] = False
                feature[i] = feat
                threshold[i] = thr
                left[i] = lft
                right[i] = rgt
            else:
                raise MalformedModelError(f"node {i} has unknown kind {kind}")
            pos[i] = p
            neg[i] = q
        tree = Tree(
            is_leaf=is_leaf,
            feature=feature,
            threshold=threshold,
            left=left,
            right=right,
            pos=pos,
            neg=neg,
        )
        if tree.depth() > max_depth:
            raise MalformedModelError("tree deeper than the declared max_depth")
        trees.append(tree)
    if offset != pos_end:
        raise ModelFormatError("trailing bytes after the last tree")

    forest = ForestClassifier(n_trees=n_trees, max_depth=max_depth, seed=seed)
    forest.trees_ = tuple(trees)
    forest.n_features_in_ = n_features
    return forest


def model_digest(blob: bytes) -> str:
    """SHA-256 hex digest of a valid blob; the training determinism witness."""
    _check_frame(blob)
    return hashlib.sha256(blob).hexdigest()
