"""Split sentences into EDUs at every gap the forest classifies positive."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document, Sentence, extract_windows, render_pipe_sentence
from .features import vectorize
from .forest import ForestModel, predict_proba_many


@dataclass
class Segmentation:
    doc_id: str
    edus: list[tuple[int, int, int]]  # (sentence_index, start, end_exclusive)
    boundary_probs: dict[tuple[int, int], float] = field(default_factory=dict)

    def sentence_lengths(self) -> list[int]:
        ends: dict[int, int] = {}
        for si, _, end in self.edus:
            ends[si] = max(ends.get(si, 0), end)
        return [ends[i] for i in range(len(ends))]

    def boundaries(self) -> list[set[int]]:
        """Predicted intra-sentence gaps, per sentence."""
        out: list[set[int]] = [set() for _ in self.sentence_lengths()]
        for si, start, _ in self.edus:
            if start > 0:
                out[si].add(start)
        return out


def spans_from_gaps(n_tokens: int, gaps: Iterable[int]) -> list[tuple[int, int]]:
    cuts = [0, *sorted(gaps), n_tokens]
    return list(zip(cuts[:-1], cuts[1:]))


def _require_space(model: ForestModel):
    if model.space is None:
        raise ValueError("model carries no feature space")
    return model.space


def segment_sentence(sentence: Sentence, model: ForestModel):
    """Return ``(spans, probs)``: half-open token spans and ``{gap: p}``."""
    space = _require_space(model)
    windows = extract_windows(sentence, labeled=False)
    probs = predict_proba_many(model, [vectorize(w, space) for w in windows])
    thr = model.params.decision_threshold
    gap_probs = {w.gap: float(p) for w, p in zip(windows, probs)}
    fired = [g for g, p in gap_probs.items() if p > thr]
    return spans_from_gaps(len(sentence), fired), gap_probs


def segment_document(doc: Document, model: ForestModel) -> Segmentation:
    space = _require_space(model)
    windows = []
    for si, sent in enumerate(doc.sentences):
        windows.extend(extract_windows(sent, labeled=False, doc_id=doc.doc_id, sentence_index=si))
    probs = predict_proba_many(model, [vectorize(w, space) for w in windows])
    thr = model.params.decision_threshold
    boundary_probs = {(w.sentence_index, w.gap): float(p) for w, p in zip(windows, probs)}
    fired: dict[int, list[int]] = {}
    for (si, gap), p in boundary_probs.items():
        if p > thr:
            fired.setdefault(si, []).append(gap)
    edus = []
    for si, sent in enumerate(doc.sentences):
        for start, end in spans_from_gaps(len(sent), fired.get(si, ())):
            edus.append((si, start, end))
    return Segmentation(doc.doc_id, edus, boundary_probs)


def segment_corpus(docs: Iterable[Document], model: ForestModel) -> list[Segmentation]:
    return [segment_document(d, model) for d in docs]


def render_pipe(doc: Document, seg: Segmentation) -> str:
    lines = [f"#doc {doc.doc_id}"]
    for sent, gaps in zip(doc.sentences, seg.boundaries()):
        lines.append(render_pipe_sentence(sent.texts, gaps))
    return "\n".join(lines) + "\n"


def render_records(doc: Document, seg: Segmentation) -> str:
    """Tab-separated EDU records.

    Columns: doc_id, sentence_index, start, end, text, and the probability
    of the boundary opening the EDU (1.0 for sentence-initial EDUs, which
    are boundaries by construction).
    """
    out = []
    for si, start, end in seg.edus:
        text = " ".join(doc.sentences[si].texts[start:end])
        p = 1.0 if start == 0 else seg.boundary_probs[(si, start)]
        out.append(f"{doc.doc_id}\t{si}\t{start}\t{end}\t{text}\t{p:.6f}")
    return "".join(line + "\n" for line in out)


def as_gold(doc: Document, seg: Segmentation) -> Document:
    """The document with its predicted boundaries installed as gold."""
    sents = tuple(Sentence(s.tokens, frozenset(b)) for s, b in zip(doc.sentences, seg.boundaries()))
    return Document(doc.doc_id, sents)


def from_marked(doc: Document) -> Segmentation:
    """Read a segmentation back from a pipe-marked document (e.g. saved ``segment`` output)."""
    edus = []
    for si, sent in enumerate(doc.sentences):
        edus += [(si, s, e) for s, e in spans_from_gaps(len(sent.tokens), sent.gold_boundaries)]
    return Segmentation(doc.doc_id, edus)
