"""Corpus-to-model training glue shared by the CLI and demos."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .corpus import CandidateWindow, Document, balanced_sample, extract_corpus_windows
from .features import FeatureSpace, build_feature_space, vectorize
from .forest import ForestModel, ForestParams, predict_proba_many, train_forest

log = logging.getLogger(__name__)


@dataclass
class TrainingSummary:
    n_docs: int
    n_features: int
    n_positive: int
    n_negative: int
    accuracy_positive: float
    accuracy_negative: float


def fit_windows(docs: Sequence[Document], windows: Sequence[CandidateWindow], params: ForestParams,
                filter_bounds: tuple[int, float] = (2, 0.5)) -> ForestModel:
    labels = [bool(w.label) for w in windows]
    if all(labels) or not any(labels):
        raise ValueError("training data must contain both classes")
    space = build_feature_space(docs, windows, filter_bounds)
    log.info("feature space: %d keys", len(space))
    samples = [(vectorize(w, space), lab) for w, lab in zip(windows, labels)]
    return train_forest(samples, params, space=space)


def train_model(docs: Sequence[Document], params: ForestParams, filter_bounds: tuple[int, float] = (2, 0.5),
                balance: bool = False) -> tuple[ForestModel, TrainingSummary]:
    """Extract windows, optionally balance them, build features and fit."""
    windows = extract_corpus_windows(docs)
    if balance:
        windows = balanced_sample(windows, params.seed)
    model = fit_windows(docs, windows, params, filter_bounds)
    return model, summarize(model, docs, windows)


def summarize(model: ForestModel, docs: Sequence[Document], windows: Sequence[CandidateWindow]) -> TrainingSummary:
    space: FeatureSpace = model.space
    probs = predict_proba_many(model, [vectorize(w, space) for w in windows])
    thr = model.params.decision_threshold
    right = {True: 0, False: 0}
    seen = {True: 0, False: 0}
    for w, p in zip(windows, probs):
        seen[bool(w.label)] += 1
        right[bool(w.label)] += (p > thr) == bool(w.label)
    return TrainingSummary(
        len(docs), len(space), seen[True], seen[False],
        right[True] / seen[True] if seen[True] else 0.0,
        right[False] / seen[False] if seen[False] else 0.0,
    )
