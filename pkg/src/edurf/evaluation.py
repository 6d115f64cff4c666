"""Classification and boundary-level metrics.

All ratios are exact ``Fraction`` values; convert with ``float`` for
display.  The positive class is always "boundary".
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .corpus import Document
from .segmenter import Segmentation


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    n_docs: int = 0
    n_boundaries_gold: int = 0
    n_boundaries_pred: int = 0

    @property
    def precision(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else Fraction(0)

    @property
    def accuracy(self) -> Fraction:
        return _ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn)

    def __add__(self, other: "MetricsReport") -> "MetricsReport":
        return MetricsReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn,
                             self.tn + other.tn, self.n_docs + other.n_docs,
                             self.n_boundaries_gold + other.n_boundaries_gold,
                             self.n_boundaries_pred + other.n_boundaries_pred)

    def as_dict(self) -> dict:
        return {
            "accuracy": float(self.accuracy), "precision": float(self.precision),
            "recall": float(self.recall), "f1": float(self.f1),
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
        }

    def key_values(self) -> str:
        return "".join(f"{k}={v:.6f}\n" if isinstance(v, float) else f"{k}={v}\n"
                       for k, v in self.as_dict().items())

    def table(self, title: str = "") -> str:
        rows = [("accuracy", float(self.accuracy)), ("precision", float(self.precision)),
                ("recall", float(self.recall)), ("f1", float(self.f1))]
        lines = [title] if title else []
        lines += [f"  {name:<10} {value:.4f}" for name, value in rows]
        lines.append(f"  tp={self.tp} fp={self.fp} fn={self.fn} tn={self.tn}")
        if self.n_docs:
            lines.append(f"  docs={self.n_docs} gold_boundaries={self.n_boundaries_gold} "
                         f"predicted_boundaries={self.n_boundaries_pred}")
        return "\n".join(lines) + "\n"


def classification_metrics(predictions: Iterable[tuple[bool, bool]]) -> MetricsReport:
    """Confusion counts over ``(predicted, gold)`` pairs."""
    tp = fp = fn = tn = 0
    n = 0
    for pred, gold in predictions:
        n += 1
        if pred and gold:
            tp += 1
        elif pred:
            fp += 1
        elif gold:
            fn += 1
        else:
            tn += 1
    if n == 0:
        raise ValueError("no predictions to score")
    return MetricsReport(tp, fp, fn, tn, n_boundaries_gold=tp + fn, n_boundaries_pred=tp + fp)


def document_counts(pred: Segmentation, gold: Document, count_sentence_initial: bool = False) -> MetricsReport:
    """Confusion counts over every intra-sentence gap of one document.

    With ``count_sentence_initial`` each sentence start also counts as a
    correctly predicted boundary.
    """
    lengths = [len(s) for s in gold.sentences]
    if pred.doc_id != gold.doc_id:
        raise ValueError(f"document mismatch: predicted {pred.doc_id!r}, gold {gold.doc_id!r}")
    if pred.sentence_lengths() != lengths:
        raise ValueError(f"document {gold.doc_id!r}: sentence lengths differ between prediction and gold")
    tp = fp = fn = tn = 0
    for sent, guessed in zip(gold.sentences, pred.boundaries()):
        truth = sent.gold_boundaries
        hit = len(truth & guessed)
        tp += hit
        fp += len(guessed) - hit
        fn += len(truth) - hit
        tn += (len(sent) - 1) - len(truth | guessed)
    n_gold = tp + fn
    n_pred = tp + fp
    if count_sentence_initial:
        k = len(gold.sentences)
        tp, n_gold, n_pred = tp + k, n_gold + k, n_pred + k
    return MetricsReport(tp, fp, fn, tn, 1, n_gold, n_pred)


def per_document_counts(pred: Sequence[Segmentation], gold: Sequence[Document],
                        count_sentence_initial: bool = False) -> list[MetricsReport]:
    by_id = {d.doc_id: d for d in gold}
    pred_ids = [s.doc_id for s in pred]
    if len(set(pred_ids)) != len(pred_ids) or set(pred_ids) != set(by_id):
        missing = sorted(set(by_id) ^ set(pred_ids))
        raise ValueError(f"prediction and gold cover different documents: {missing[:5]}")
    return [document_counts(s, by_id[s.doc_id], count_sentence_initial) for s in pred]


def boundary_metrics(pred: Sequence[Segmentation], gold: Sequence[Document],
                     count_sentence_initial: bool = False) -> MetricsReport:
    """Micro-averaged boundary scores pooled over all documents."""
    total = MetricsReport(0, 0, 0, 0)
    for counts in per_document_counts(pred, gold, count_sentence_initial):
        total = total + counts
    return total


def per_document_tsv(pred: Sequence[Segmentation], gold: Sequence[Document],
                     count_sentence_initial: bool = False) -> str:
    lines = ["doc_id\ttp\tfp\tfn\ttn\tprecision\trecall\tf1"]
    for seg, m in zip(pred, per_document_counts(pred, gold, count_sentence_initial)):
        lines.append(f"{seg.doc_id}\t{m.tp}\t{m.fp}\t{m.fn}\t{m.tn}\t"
                     f"{float(m.precision):.6f}\t{float(m.recall):.6f}\t{float(m.f1):.6f}")
    return "\n".join(lines) + "\n"
