"""Deterministic synthetic gold corpus.

Stands in for licensed discourse treebanks in tests and demos.  Every
EDU after the first in a sentence opens with a cue word, and the EDU
before it closes with a comma; these are the only boundaries.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import CandidateWindow, Document, Sentence

CUE_WORDS = ("because", "which", "although", "while", "since", "unless", "whereas", "after")

# compact on purpose: with a few hundred features the default sqrt(D)
# draw sees the boundary cues often enough for depth-32 trees
FILLER = (
    "the report market company shares investors price board officials analysts "
    "bank rates plan government workers contract profits sales growth stock "
    "said reported expected rose fell announced agreed approved raised lowered "
    "new strong weak higher lower recent annual financial sharply quickly"
).split()


def _words(rng: np.random.Generator, n: int) -> list[str]:
    return [FILLER[i] for i in rng.integers(0, len(FILLER), size=n)]


def generate_document(rng: np.random.Generator, doc_id: str) -> Document:
    sentences = []
    for _ in range(int(rng.integers(4, 11))):
        n_edus = int(rng.choice(3, p=[0.4, 0.4, 0.2])) + 1
        texts: list[str] = []
        boundaries = []
        for e in range(n_edus):
            if e == 0:
                edu = _words(rng, int(rng.integers(4, 9)))
                edu[0] = edu[0].capitalize()
            else:
                texts.append(",")
                boundaries.append(len(texts))
                edu = [CUE_WORDS[int(rng.integers(len(CUE_WORDS)))]] + _words(rng, int(rng.integers(3, 8)))
            texts.extend(edu)
        texts.append(".")
        sentences.append(Sentence.from_texts(texts, boundaries))
    return Document(doc_id, tuple(sentences))


def generate_corpus(n_docs: int, seed: int = 0, prefix: str = "syn") -> list[Document]:
    """``n_docs`` documents; document ``k`` depends only on ``(seed, k)``."""
    docs = []
    for k in range(n_docs):
        rng = np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, k]))
        docs.append(generate_document(rng, f"{prefix}{k:05d}"))
    return docs


def flip_labels(windows: Sequence[CandidateWindow], rate: float, seed: int) -> list[CandidateWindow]:
    """Copy of ``windows`` with a seeded ``rate`` fraction of labels inverted."""
    rng = np.random.Generator(np.random.Philox(seed))
    n_flip = int(round(rate * len(windows)))
    flip = set(rng.choice(len(windows), size=n_flip, replace=False).tolist())
    return [w.with_label(not w.label) if i in flip else w for i, w in enumerate(windows)]
