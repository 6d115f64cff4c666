"""Corpus ingestion, tokenization and candidate-boundary windows.

Documents are sequences of sentences; each sentence carries the set of
intra-sentence gaps at which a gold EDU begins.  A gap ``i`` sits
immediately before ``tokens[i]``, so valid gaps are ``1 .. len - 1``.
Sentence starts are EDU starts by construction and are never gaps.
"""
from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

PUNCTUATION = frozenset('.,;:!?"\'()[]—')
BEFORE_SIZE = 3
LEADING_SIZE = 3
CONTINUING_SIZE = 3
PIPE = "|"
DOC_HEADER = "#doc"


class CorpusFormatError(ValueError):
    """Raised for malformed corpus input; names the document and line."""

    def __init__(self, message: str, doc_id: str | None = None, line: int | None = None):
        where = []
        if doc_id is not None:
            where.append(f"doc {doc_id!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.doc_id = doc_id
        self.line = line


@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"invalid token text {self.text!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    gold_boundaries: frozenset[int] = frozenset()

    def __post_init__(self):
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValueError("token indices must be contiguous from 0")
        n = len(self.tokens)
        bad = [g for g in self.gold_boundaries if not 1 <= g <= n - 1]
        if bad:
            raise ValueError(f"gold boundaries {sorted(bad)} outside [1, {n - 1}]")

    @classmethod
    def from_texts(cls, texts: Iterable[str], boundaries: Iterable[int] = ()) -> "Sentence":
        tokens = tuple(Token(t, i) for i, t in enumerate(texts))
        return cls(tokens, frozenset(boundaries))

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def edu_spans(self) -> list[tuple[int, int]]:
        """Gold EDU spans as half-open ``(start, end)`` token ranges."""
        cuts = [0, *sorted(self.gold_boundaries), len(self.tokens)]
        return list(zip(cuts[:-1], cuts[1:]))


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        if not self.sentences:
            raise ValueError(f"document {self.doc_id!r} has no sentences")


@dataclass(frozen=True)
class CandidateWindow:
    doc_id: str
    sentence_index: int
    gap: int
    before: tuple[str, ...]
    leading: tuple[str, ...]
    continuing: tuple[str, ...]
    label: bool | None = None

    def regions(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        yield "B", self.before
        yield "L", self.leading
        yield "C", self.continuing

    def with_label(self, label: bool | None) -> "CandidateWindow":
        return CandidateWindow(self.doc_id, self.sentence_index, self.gap,
                               self.before, self.leading, self.continuing, label)


def _split_chunk(chunk: str) -> list[str]:
    start, end = 0, len(chunk)
    head = []
    while start < end and chunk[start] in PUNCTUATION:
        head.append(chunk[start])
        start += 1
    tail = []
    while end > start and chunk[end - 1] in PUNCTUATION:
        tail.append(chunk[end - 1])
        end -= 1
    middle = [chunk[start:end]] if end > start else []
    return head + middle + tail[::-1]


def tokenize(raw_sentence: str) -> list[Token]:
    """Split one sentence into tokens.

    Whitespace separates chunks; punctuation marks at either edge of a
    chunk become tokens of their own, interior ones (``don't``,
    ``well-known``) stay attached.
    """
    texts = []
    for chunk in raw_sentence.split():
        texts.extend(_split_chunk(chunk))
    return [Token(t, i) for i, t in enumerate(texts)]


def tokenize_texts(raw_sentence: str) -> list[str]:
    return [t.text for t in tokenize(raw_sentence)]


# ---------------------------------------------------------------------------
# pipe-marked and plain formats


def _blocks(lines: Iterable[str]) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                yield block
                block = []
            continue
        block.append((lineno, line))
    if block:
        yield block


def _header_id(line: str) -> str | None:
    parts = line.split(None, 1)
    if parts and parts[0] == DOC_HEADER:
        if len(parts) < 2 or not parts[1].strip():
            return ""
        return parts[1].strip()
    return None


def parse_pipe_sentence(line: str, doc_id: str | None = None, lineno: int | None = None) -> Sentence:
    """Parse one pipe-marked line such as ``He left | because it rained .``."""
    pieces: list[list[str]] = [[]]
    for chunk in line.split():
        if chunk == PIPE:
            pieces.append([])
        else:
            pieces[-1].extend(_split_chunk(chunk))
    if any(not p for p in pieces):
        raise CorpusFormatError("boundary marker not between two tokens", doc_id, lineno)
    texts: list[str] = []
    boundaries = []
    for piece in pieces:
        if texts:
            boundaries.append(len(texts))
        texts.extend(piece)
    return Sentence.from_texts(texts, boundaries)


def read_pipe_marked(stream: TextIO) -> list[Document]:
    """Read gold documents from pipe-marked text."""
    docs = []
    seen = set()
    for block in _blocks(stream):
        lineno, first = block[0]
        doc_id = _header_id(first)
        if doc_id is None:
            raise CorpusFormatError("document block must start with '#doc <doc_id>'", None, lineno)
        if not doc_id:
            raise CorpusFormatError("empty doc_id in header", None, lineno)
        if doc_id in seen:
            raise CorpusFormatError("duplicate doc_id", doc_id, lineno)
        seen.add(doc_id)
        sentences = []
        for lineno, line in block[1:]:
            if _header_id(line) is not None:
                raise CorpusFormatError("header inside document block (missing blank line?)", doc_id, lineno)
            sentences.append(parse_pipe_sentence(line, doc_id, lineno))
        if not sentences:
            raise CorpusFormatError("document has no sentences", doc_id, lineno)
        docs.append(Document(doc_id, tuple(sentences)))
    return docs


def read_plain(stream: TextIO) -> list[Document]:
    """Read unlabeled text: one sentence per line, optional ``#doc`` headers.

    A block without a header gets the id ``doc<k>`` where ``k`` counts
    blocks from 0.
    """
    docs = []
    seen = set()
    for k, block in enumerate(_blocks(stream)):
        lineno, first = block[0]
        doc_id = _header_id(first)
        body = block
        if doc_id is not None:
            body = block[1:]
            if not doc_id:
                raise CorpusFormatError("empty doc_id in header", None, lineno)
        else:
            doc_id = f"doc{k}"
        if doc_id in seen:
            raise CorpusFormatError("duplicate doc_id", doc_id, lineno)
        seen.add(doc_id)
        sentences = []
        for lineno, line in body:
            texts = tokenize_texts(line)
            if texts:
                sentences.append(Sentence.from_texts(texts))
        if sentences:
            docs.append(Document(doc_id, tuple(sentences)))
    return docs


def render_pipe_sentence(texts: Sequence[str], boundaries: Iterable[int]) -> str:
    cuts = set(boundaries)
    out = []
    for i, t in enumerate(texts):
        if i in cuts:
            out.append(PIPE)
        out.append(t)
    return " ".join(out)


def render_pipe_marked(docs: Iterable[Document]) -> str:
    blocks = []
    for doc in docs:
        lines = [f"{DOC_HEADER} {doc.doc_id}"]
        lines += [render_pipe_sentence(s.texts, s.gold_boundaries) for s in doc.sentences]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# edu-lines format

_RANGE_RE = re.compile(r"^\s*(\d+)\s+(\d+)\s*(?:\t(.*))?$")


def align_edus(sentence_tokens: Sequence[str], edus: Sequence[Sequence[str]]) -> list[int]:
    """Greedy longest-prefix alignment of EDU token lists onto a sentence.

    Comparison ignores token boundaries: each EDU must cover a run of
    sentence tokens whose concatenated characters equal the EDU's
    concatenated characters.  Returns the gap positions where the second
    and later EDUs begin.  Raises ``ValueError`` on any mismatch.
    """
    cursor = 0
    starts = []
    for k, edu in enumerate(edus):
        target = "".join(edu)
        if not target:
            raise ValueError(f"EDU {k} is empty")
        starts.append(cursor)
        consumed = ""
        while cursor < len(sentence_tokens) and len(consumed) < len(target):
            nxt = consumed + sentence_tokens[cursor]
            if not target.startswith(nxt):
                break
            consumed = nxt
            cursor += 1
        if consumed != target:
            raise ValueError(f"EDU {k} {' '.join(edu)!r} does not align with the sentence at token {starts[-1]}")
    if cursor != len(sentence_tokens):
        raise ValueError(f"sentence tokens {cursor}.. not covered by any EDU")
    return starts[1:]


def read_edu_lines(edus: TextIO, sents: TextIO, doc_id: str) -> Document:
    """Read one document from an ``.edus`` / ``.sents`` pair.

    ``edus`` holds one EDU per line.  Each ``sents`` line is
    ``FIRST LAST`` (1-based, inclusive EDU line numbers) optionally
    followed by a tab and the raw sentence text; without text the sentence
    is the concatenation of its EDUs.
    """
    edu_lines = [ln.rstrip("\r\n") for ln in edus]
    while edu_lines and not edu_lines[-1].strip():
        edu_lines.pop()
    for i, ln in enumerate(edu_lines, start=1):
        if not ln.strip():
            raise CorpusFormatError("empty EDU line", doc_id, i)
    edu_tokens = [tokenize_texts(ln) for ln in edu_lines]

    sentences = []
    expected_first = 1
    for lineno, raw in enumerate(sents, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        m = _RANGE_RE.match(line)
        if not m:
            raise CorpusFormatError("expected 'FIRST LAST[<TAB>sentence text]'", doc_id, lineno)
        first, last = int(m.group(1)), int(m.group(2))
        if first != expected_first or last < first or last > len(edu_lines):
            raise CorpusFormatError(f"EDU range {first}-{last} is not contiguous with previous sentences "
                                    f"or exceeds {len(edu_lines)} EDUs", doc_id, lineno)
        expected_first = last + 1
        group = edu_tokens[first - 1:last]
        text = m.group(3)
        if text is None:
            texts = [t for edu in group for t in edu]
        else:
            texts = tokenize_texts(text)
        try:
            boundaries = align_edus(texts, group)
        except ValueError as exc:
            raise CorpusFormatError(str(exc), doc_id, lineno) from None
        sentences.append(Sentence.from_texts(texts, boundaries))
    if expected_first != len(edu_lines) + 1:
        raise CorpusFormatError(f"EDUs {expected_first}..{len(edu_lines)} not assigned to a sentence", doc_id)
    if not sentences:
        raise CorpusFormatError("document has no sentences", doc_id)
    return Document(doc_id, tuple(sentences))


def read_edu_lines_dir(directory: str | os.PathLike) -> list[Document]:
    """Read every ``<doc_id>.edus`` with its sibling ``<doc_id>.sents``."""
    directory = Path(directory)
    docs = []
    for edus_path in sorted(directory.glob("*.edus")):
        doc_id = edus_path.name[: -len(".edus")]
        sents_path = edus_path.with_name(doc_id + ".sents")
        if not sents_path.exists():
            raise CorpusFormatError(f"missing sentence file {sents_path.name}", doc_id)
        with open(edus_path, encoding="utf-8") as e, open(sents_path, encoding="utf-8") as s:
            docs.append(read_edu_lines(e, s, doc_id))
    return docs


def load_gold_corpus(source, format: str = "pipe-marked") -> list[Document]:
    """Load gold documents.

    ``source`` is a path or text stream for ``pipe-marked``, a directory
    path for ``edu-lines``.
    """
    if format == "pipe-marked":
        if isinstance(source, (str, os.PathLike)):
            with open(source, encoding="utf-8") as f:
                return read_pipe_marked(f)
        return read_pipe_marked(source)
    if format == "edu-lines":
        return read_edu_lines_dir(source)
    raise ValueError(f"unknown corpus format {format!r}")


def loads_pipe_marked(text: str) -> list[Document]:
    return read_pipe_marked(io.StringIO(text))


# ---------------------------------------------------------------------------
# windows


def extract_windows(sentence: Sentence, labeled: bool = True, doc_id: str = "",
                    sentence_index: int = 0) -> list[CandidateWindow]:
    """One window per intra-sentence gap, regions truncated at sentence edges."""
    texts = tuple(sentence.texts)
    n = len(texts)
    windows = []
    for i in range(1, n):
        label = (i in sentence.gold_boundaries) if labeled else None
        windows.append(CandidateWindow(
            doc_id, sentence_index, i,
            before=texts[max(0, i - BEFORE_SIZE):i],
            leading=texts[i:i + LEADING_SIZE],
            continuing=texts[i + LEADING_SIZE:i + LEADING_SIZE + CONTINUING_SIZE],
            label=label,
        ))
    return windows


def extract_corpus_windows(docs: Iterable[Document], labeled: bool = True) -> list[CandidateWindow]:
    """Windows for a whole corpus, ordered by (doc_id, sentence_index, gap)."""
    out = []
    for doc in sorted(docs, key=lambda d: d.doc_id):
        for si, sent in enumerate(doc.sentences):
            out.extend(extract_windows(sent, labeled, doc.doc_id, si))
    return out


def balanced_sample(windows: Sequence[CandidateWindow], seed: int) -> list[CandidateWindow]:
    """Keep the minority class whole, subsample the majority to equal size.

    Sampling is without replacement and the result is shuffled; both use
    a Philox generator seeded with ``seed``.
    """
    pos = [w for w in windows if w.label]
    neg = [w for w in windows if not w.label]
    if not pos or not neg:
        raise ValueError("cannot balance single-class data")
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    rng = np.random.Generator(np.random.Philox(seed))
    picked = np.sort(rng.choice(len(majority), size=len(minority), replace=False))
    pool = minority + [majority[i] for i in picked]
    order = rng.permutation(len(pool))
    return [pool[i] for i in order]
