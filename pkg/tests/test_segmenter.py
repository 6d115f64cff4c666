import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edurf import segmenter
from edurf.corpus import Document, Sentence, loads_pipe_marked
from edurf.evaluation import boundary_metrics
from edurf.forest import ForestParams
from edurf.pipeline import train_model
from edurf.segmenter import (Segmentation, as_gold, render_pipe, render_records, segment_document,
                             segment_sentence, spans_from_gaps)
from edurf.synthetic import generate_corpus


@pytest.fixture
def fires_at(monkeypatch):
    """Replace the forest with a classifier firing at a chosen set of gaps."""
    def install(decide):
        def fake(model, vectors):
            return np.array([decide() for _ in vectors], dtype=float)
        monkeypatch.setattr(segmenter, "predict_proba_many", fake)
    return install


def _gap_oracle(gaps):
    it = iter(gaps)
    return lambda: next(it)


def test_segment_sentence_examples(small_model, fires_at):
    sent = Sentence.from_texts(list("abcdef"))
    fires_at(_gap_oracle([0.1, 0.9, 0.2, 0.3, 0.0]))
    spans, probs = segment_sentence(sent, small_model)
    assert spans == [(0, 2), (2, 6)]
    assert probs == {1: 0.1, 2: 0.9, 3: 0.2, 4: 0.3, 5: 0.0}

    fires_at(lambda: 0.0)
    assert segment_sentence(sent, small_model)[0] == [(0, 6)]
    fires_at(lambda: 1.0)
    assert segment_sentence(sent, small_model)[0] == [(i, i + 1) for i in range(6)]


def test_threshold_tie_is_not_a_boundary(small_model, fires_at):
    fires_at(lambda: 0.5)
    assert segment_sentence(Sentence.from_texts(list("abc")), small_model)[0] == [(0, 3)]


def test_segment_document_no_positive_gaps(small_model, fires_at):
    doc = Document("d", (Sentence.from_texts(list("abc")), Sentence.from_texts(list("de"))))
    fires_at(lambda: 0.0)
    seg = segment_document(doc, small_model)
    assert seg.edus == [(0, 0, 3), (1, 0, 2)]
    assert set(seg.boundary_probs) == {(0, 1), (0, 2), (1, 1)}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 25), min_size=1, max_size=5), st.integers(0, 2**31))
def test_partition_property(small_model, lengths, seed):
    rs = np.random.default_rng(seed)
    doc = Document("d", tuple(Sentence.from_texts([f"w{i}" for i in range(n)]) for n in lengths))
    original = segmenter.predict_proba_many
    segmenter.predict_proba_many = lambda model, vecs: rs.random(len(vecs))
    try:
        seg = segment_document(doc, small_model)
    finally:
        segmenter.predict_proba_many = original
    for si, n in enumerate(lengths):
        spans = [(s, e) for i, s, e in seg.edus if i == si]
        assert spans[0][0] == 0 and spans[-1][1] == n
        assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
        assert all(s < e for s, e in spans)
        fired = sum(1 for (i, _), p in seg.boundary_probs.items() if i == si and p > 0.5)
        assert len(spans) == 1 + fired


def test_spans_from_gaps():
    assert spans_from_gaps(4, []) == [(0, 4)]
    assert spans_from_gaps(4, [3, 1]) == [(0, 1), (1, 3), (3, 4)]


@pytest.fixture(scope="module")
def separable():
    train = generate_corpus(60, seed=8)
    model, _ = train_model(train, ForestParams(n_trees=30, seed=42))
    return train, model


def test_recovers_gold_on_training_documents(separable):
    train, model = separable
    for doc in train[:15]:
        seg = segment_document(doc, model)
        assert as_gold(doc, seg) == doc


def test_deterministic(separable):
    train, model = separable
    assert segment_document(train[0], model) == segment_document(train[0], model)


def test_pipe_round_trip(separable):
    train, model = separable
    doc = train[1]
    seg = segment_document(doc, model)
    (reloaded,) = loads_pipe_marked(render_pipe(doc, seg))
    assert [s.gold_boundaries for s in reloaded.sentences] == [set(b) for b in seg.boundaries()]
    assert boundary_metrics([seg], [reloaded]).f1 == 1


def test_records_output():
    doc = Document("d7", (Sentence.from_texts(["He", "left", ",", "because", "it", "rained", "."]),))
    seg = Segmentation("d7", [(0, 0, 3), (0, 3, 7)], {(0, g): (0.8 if g == 3 else 0.1) for g in range(1, 7)})
    rows = [line.split("\t") for line in render_records(doc, seg).splitlines()]
    assert rows == [["d7", "0", "0", "3", "He left ,", "1.000000"],
                    ["d7", "0", "3", "7", "because it rained .", "0.800000"]]
