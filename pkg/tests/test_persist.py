import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edurf import persist
from edurf.forest import ForestModel, ForestParams, predict_proba, predict_proba_many, train_forest


def test_round_trip_is_bit_exact(small_model):
    data = persist.dumps(small_model)
    again = persist.loads(data)
    assert persist.dumps(again) == data
    assert again.params == small_model.params
    assert again.space == small_model.space
    assert again.trees == small_model.trees


def test_header_layout(small_model):
    data = persist.dumps(small_model)
    assert data[:5] == b"ESURF"
    assert struct.unpack_from("<I", data, 5)[0] == persist.FORMAT_VERSION
    assert data[9:13] == b"PARM"


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 400), max_size=40))
def test_round_trip_predictions(small_model, vec):
    again = persist.loads(persist.dumps(small_model))
    v = sorted(set(i for i in vec if i < small_model.n_features))
    assert predict_proba(again, v) == predict_proba(small_model, v)


def test_model_without_space():
    samples = [([0], True), ([1], False), ([0, 1], True), ([], False)]
    model = train_forest(samples, ForestParams(n_trees=3, seed=1))
    again = persist.loads(persist.dumps(model))
    assert again.space is None and again.trees == model.trees


def test_bad_magic_and_version(small_model):
    data = persist.dumps(small_model)
    with pytest.raises(persist.ModelFormatError, match="magic"):
        persist.loads(b"XSURF" + data[5:])
    bumped = data[:5] + struct.pack("<I", 7) + data[9:]
    with pytest.raises(persist.ModelFormatError, match="expected 1, found 7"):
        persist.loads(bumped)


@pytest.mark.parametrize("cut", [3, 9, 20, -1, -30])
def test_truncated_model(small_model, cut):
    data = persist.dumps(small_model)
    with pytest.raises(persist.ModelFormatError):
        persist.loads(data[:cut])


def test_save_and_load(tmp_path, small_model):
    path = tmp_path / "m.bin"
    persist.save_model(small_model, path)
    assert persist.load_model(path).trees == small_model.trees
    assert [p.name for p in tmp_path.iterdir()] == ["m.bin"]


def test_random_vectors_identical_after_reload(small_model):
    again = persist.loads(persist.dumps(small_model))
    rs = np.random.default_rng(0)
    vecs = [np.flatnonzero(rs.random(small_model.n_features) < 0.03) for _ in range(200)]
    assert np.array_equal(predict_proba_many(again, vecs), predict_proba_many(small_model, vecs))
