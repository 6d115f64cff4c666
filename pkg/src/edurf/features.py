"""Region-marked token and character n-gram features.

Every feature is a ``FeatureKey(region, kind, value)``: the region is one
of ``B`` (before the gap), ``L`` (leading the candidate EDU) or ``C``
(continuing it).  Token keys keep case; character n-grams are taken from
the lowercased token wrapped as ``^token$``.
"""
from __future__ import annotations

import struct
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import CandidateWindow, Document

REGIONS = ("B", "L", "C")
TOKEN = "token"
CHAR_SUB = "char-sub"
KINDS = (CHAR_SUB, TOKEN)
MIN_NGRAM = 2
MAX_NGRAM = 4
SPACE_FORMAT_VERSION = 1


class FeatureKey(NamedTuple):
    region: str
    kind: str
    value: str


def char_subsequences(token_text: str) -> set[str]:
    """Contiguous substrings of length 2..4 of ``^`` + lowercased token + ``$``.

    >>> sorted(char_subsequences("to"))
    ['^t', '^to', '^to$', 'o$', 'to', 'to$']
    """
    s = "^" + token_text.lower() + "$"
    return {s[i:i + n] for n in range(MIN_NGRAM, MAX_NGRAM + 1) for i in range(len(s) - n + 1)}


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def keep_char_sub(doc_freq: int, n_docs: int, min_docs: int, max_doc_fraction) -> bool:
    return min_docs <= doc_freq and doc_freq <= as_fraction(max_doc_fraction) * n_docs


def _window_pairs(window: CandidateWindow) -> Iterable[tuple[str, str]]:
    for region, toks in window.regions():
        for t in toks:
            yield region, t


@dataclass
class FeatureSpace:
    """Frozen vocabulary mapping feature keys to dense indices."""

    keys: tuple[FeatureKey, ...]
    doc_freq: tuple[int, ...]
    n_train_docs: int
    min_docs: int = 2
    max_doc_fraction: float = 0.5
    key_to_index: dict[FeatureKey, int] = field(init=False, repr=False, compare=False)
    _cache: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if len(self.keys) != len(self.doc_freq):
            raise ValueError("keys and doc_freq differ in length")
        self.key_to_index = {k: i for i, k in enumerate(self.keys)}
        if len(self.key_to_index) != len(self.keys):
            raise ValueError("duplicate feature keys")

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def filter_bounds(self) -> tuple[int, float]:
        return self.min_docs, self.max_doc_fraction

    def doc_freq_of(self, key: FeatureKey) -> int:
        return self.doc_freq[self.key_to_index[key]]

    def pair_indices(self, region: str, text: str) -> tuple[int, ...]:
        """Indices contributed by one token occurring in one region."""
        hit = self._cache.get((region, text))
        if hit is None:
            idx = self.key_to_index
            found = []
            k = idx.get(FeatureKey(region, TOKEN, text))
            if k is not None:
                found.append(k)
            for sub in char_subsequences(text):
                k = idx.get(FeatureKey(region, CHAR_SUB, sub))
                if k is not None:
                    found.append(k)
            hit = tuple(found)
            self._cache[(region, text)] = hit
        return hit

    def vectorize(self, window: CandidateWindow) -> np.ndarray:
        return vectorize(window, self)

    # serialization: versioned, every variable-length field length-prefixed
    def to_bytes(self) -> bytes:
        out = [struct.pack("<IIId", SPACE_FORMAT_VERSION, self.n_train_docs, self.min_docs,
                           float(self.max_doc_fraction)), struct.pack("<I", len(self.keys))]
        for key, df in zip(self.keys, self.doc_freq):
            value = key.value.encode("utf-8")
            out.append(struct.pack("<BBII", REGIONS.index(key.region), KINDS.index(key.kind), df, len(value)))
            out.append(value)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FeatureSpace":
        version, n_docs, min_docs, frac = struct.unpack_from("<IIId", data, 0)
        if version != SPACE_FORMAT_VERSION:
            raise ValueError(f"feature space format version {version}, expected {SPACE_FORMAT_VERSION}")
        off = struct.calcsize("<IIId")
        (n_keys,) = struct.unpack_from("<I", data, off)
        off += 4
        keys, dfs = [], []
        head = struct.calcsize("<BBII")
        for _ in range(n_keys):
            r, k, df, ln = struct.unpack_from("<BBII", data, off)
            off += head
            value = data[off:off + ln].decode("utf-8")
            off += ln
            keys.append(FeatureKey(REGIONS[r], KINDS[k], value))
            dfs.append(df)
        if off != len(data):
            raise ValueError("trailing bytes after feature space")
        return cls(tuple(keys), tuple(dfs), n_docs, min_docs, frac)

    def dump_tsv(self) -> str:
        lines = ["key\tregion\tkind\tdoc_freq\tindex"]
        for i, (key, df) in enumerate(zip(self.keys, self.doc_freq)):
            lines.append(f"{key.value}\t{key.region}\t{key.kind}\t{df}\t{i}")
        return "\n".join(lines) + "\n"


def count_doc_freq(windows: Iterable[CandidateWindow]) -> dict[FeatureKey, int]:
    """Number of distinct documents with at least one window exhibiting each key."""
    pairs_by_doc: dict[str, set[tuple[str, str]]] = defaultdict(set)
    for w in windows:
        pairs_by_doc[w.doc_id].update(_window_pairs(w))
    df: dict[FeatureKey, int] = defaultdict(int)
    for pairs in pairs_by_doc.values():
        keys = set()
        for region, text in pairs:
            keys.add(FeatureKey(region, TOKEN, text))
            keys.update(FeatureKey(region, CHAR_SUB, s) for s in char_subsequences(text))
        for k in keys:
            df[k] += 1
    return df


def build_feature_space(train_docs: Sequence[Document], windows: Iterable[CandidateWindow],
                        filter_bounds: tuple[int, float] = (2, 0.5)) -> FeatureSpace:
    """Count document frequencies over ``windows`` and keep informative keys.

    Token keys need ``doc_freq >= min_docs``; character n-gram keys need
    ``min_docs <= doc_freq <= max_doc_fraction * len(train_docs)``.
    Indices follow lexicographic order of ``(kind, region, value)``.
    """
    if not train_docs:
        raise ValueError("empty training set")
    min_docs, max_frac = filter_bounds
    n_docs = len(train_docs)
    windows = list(windows)
    known = {d.doc_id for d in train_docs}
    stray = {w.doc_id for w in windows} - known
    if stray:
        # document frequency is keyed on doc_id, so unattributed windows would be miscounted
        raise ValueError(f"windows from documents outside the training set: {sorted(stray)[:3]}")
    df = count_doc_freq(windows)
    ceiling = as_fraction(max_frac) * n_docs
    kept = []
    for key, n in df.items():
        if key.kind == TOKEN:
            ok = n >= min_docs
        else:
            ok = min_docs <= n <= ceiling
        if ok:
            kept.append(key)
    kept.sort(key=lambda k: (k.kind, k.region, k.value))
    return FeatureSpace(tuple(kept), tuple(df[k] for k in kept), n_docs, min_docs, max_frac)


def vectorize(window: CandidateWindow, space: FeatureSpace) -> np.ndarray:
    """Sorted distinct feature indices present in ``window``; unknown keys dropped."""
    found = set()
    for region, text in _window_pairs(window):
        found.update(space.pair_indices(region, text))
    return np.array(sorted(found), dtype=np.int64)


def vectorize_all(windows: Sequence[CandidateWindow], space: FeatureSpace) -> list[np.ndarray]:
    return [vectorize(w, space) for w in windows]
