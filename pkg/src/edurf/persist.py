"""Binary model container.

Layout (little-endian throughout)::

    b"ESURF"  u32 format_version
    section*  : 4-byte tag, u64 payload length, payload
        PARM  forest parameters
        FSPC  feature space (empty payload when the model has none)
        TREE  u32 n_features, u32 n_trees, then per tree u32 n_nodes and
              the nodes in pre-order: u8 0 + u32 feature (internal)
              or u8 1 + u64 positive + u64 total (leaf)

See docs/model_format.md for the byte-level description.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .features import FeatureSpace
from .forest import ForestModel, ForestParams, Tree

MAGIC = b"ESURF"
FORMAT_VERSION = 1
_PARAMS = struct.Struct("<IIIIQd")
_SECTION = struct.Struct("<4sQ")


class ModelFormatError(ValueError):
    pass


def _params_bytes(p: ForestParams) -> bytes:
    return _PARAMS.pack(p.n_trees, p.max_depth, p.min_leaf, p.features_per_split or 0,
                        p.seed, float(p.decision_threshold))


def _params_from(data: bytes) -> ForestParams:
    n_trees, depth, min_leaf, fps, seed, thr = _PARAMS.unpack(data)
    return ForestParams(n_trees, depth, min_leaf, fps or None, seed, thr)


def _tree_bytes(t: Tree) -> bytes:
    out = [struct.pack("<I", len(t))]
    for i in range(len(t)):
        if t.feature[i] >= 0:
            out.append(struct.pack("<BI", 0, int(t.feature[i])))
        else:
            out.append(struct.pack("<BQQ", 1, int(t.positive[i]), int(t.total[i])))
    return b"".join(out)


def _read_tree(data: bytes, off: int) -> tuple[Tree, int]:
    (n,) = struct.unpack_from("<I", data, off)
    off += 4
    feature = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    positive = np.zeros(n, dtype=np.int64)
    total = np.zeros(n, dtype=np.int64)
    for i in range(n):
        tag = data[off]
        if tag == 0:
            (feature[i],) = struct.unpack_from("<I", data, off + 1)
            off += 5
        elif tag == 1:
            positive[i], total[i] = struct.unpack_from("<QQ", data, off + 1)
            off += 17
        else:
            raise ModelFormatError(f"bad node tag {tag}")

    # recover present-branch pointers: walking pre-order, each leaf closes
    # the innermost internal node still waiting for its present branch
    pending = []
    for i in range(n):
        if feature[i] >= 0:
            pending.append(i)
        elif i + 1 < n:
            if not pending:
                raise ModelFormatError("tree node count does not match its structure")
            right[pending.pop()] = i + 1
    if pending or n == 0:
        raise ModelFormatError("truncated tree")
    # internal nodes carry the counts of the samples that reached them
    for i in range(n - 1, -1, -1):
        if feature[i] >= 0:
            positive[i] = positive[i + 1] + positive[right[i]]
            total[i] = total[i + 1] + total[right[i]]
    return Tree(feature, right, positive, total), off


def dumps(model: ForestModel) -> bytes:
    trees = [struct.pack("<II", model.n_features, len(model.trees))]
    trees += [_tree_bytes(t) for t in model.trees]
    sections = [
        (b"PARM", _params_bytes(model.params)),
        (b"FSPC", model.space.to_bytes() if model.space is not None else b""),
        (b"TREE", b"".join(trees)),
    ]
    out = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for tag, payload in sections:
        out.append(_SECTION.pack(tag, len(payload)))
        out.append(payload)
    return b"".join(out)


def loads(data: bytes) -> ForestModel:
    if data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"not a model file: magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    off = len(MAGIC)
    if len(data) < off + 4:
        raise ModelFormatError("truncated header")
    (version,) = struct.unpack_from("<I", data, off)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model format version mismatch: expected {FORMAT_VERSION}, found {version}")
    off += 4
    sections = {}
    try:
        while off < len(data):
            tag, length = _SECTION.unpack_from(data, off)
            off += _SECTION.size
            if off + length > len(data):
                raise ModelFormatError(f"section {tag!r} truncated")
            sections[tag] = data[off:off + length]
            off += length
        for tag in (b"PARM", b"FSPC", b"TREE"):
            if tag not in sections:
                raise ModelFormatError(f"missing section {tag.decode()}")
        params = _params_from(sections[b"PARM"])
        space = FeatureSpace.from_bytes(sections[b"FSPC"]) if sections[b"FSPC"] else None
        body = sections[b"TREE"]
        n_features, n_trees = struct.unpack_from("<II", body, 0)
        pos = 8
        trees = []
        for _ in range(n_trees):
            t, pos = _read_tree(body, pos)
            trees.append(t)
        if pos != len(body):
            raise ModelFormatError("trailing bytes in tree section")
        return ForestModel(trees, params, n_features, space)
    except ModelFormatError:
        raise
    except (struct.error, ValueError, IndexError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from None


def save_model(model: ForestModel, path: str | os.PathLike) -> None:
    """Write atomically: the target appears only once fully written."""
    path = Path(path)
    data = dumps(model)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | os.PathLike) -> ForestModel:
    with open(path, "rb") as f:
        return loads(f.read())
