"""Sparse BM25 score index.

The index bakes per-(term, document) BM25 scores into a CSC matrix at build
time: column t holds the scores of every document containing term t, so
query scoring reduces to summing column slices.  The baked weight is the
Lucene shifted IDF ``log(1 + (N - n_t + 0.5) / (n_t + 0.5))`` times the
saturated, length-normalized term-frequency factor.  Scores are stored as
float32; all scoring arithmetic upstream of storage is float64.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus_io import Corpus
from .errors import BuildError
from .tokenizers import TokenizerMode, tokenize

__all__ = ["BuildParams", "IndexHeader", "SparseScoreIndex", "build_index", "term_stats"]

SCORER_BM25 = "bm25"
SCORER_DPH = "dph"


@dataclass(frozen=True)
class BuildParams:
    """BM25 hyperparameters. ``delta`` is the RSJ smoothing constant."""

    k1: float = 1.5
    b: float = 0.75
    delta: float = 0.5

    def __post_init__(self):
        if not (self.k1 > 0 and math.isfinite(self.k1)):
            raise ValueError(f"k1 must be finite and > 0, got {self.k1}")
        if not (0.0 <= self.b <= 1.0):
            raise ValueError(f"b must lie in [0, 1], got {self.b}")
        if self.delta != 0.5:
            raise ValueError("the RSJ smoothing constant is fixed at 0.5")


@dataclass
class IndexHeader:
    """Auditable index state: tokenizer mode, scorer, and applied transforms.

    ``applied_q`` / ``applied_gamma`` are None until the corresponding
    in-place IDF transform has been run; an index accepts at most one.
    """

    mode: TokenizerMode
    scorer: str = SCORER_BM25
    applied_q: float | None = None
    applied_gamma: float | None = None


@dataclass
class SparseScoreIndex:
    """CSC score matrix over (vocabulary columns, document rows).

    ``col_ptr[t]:col_ptr[t+1]`` is the extent of column t inside
    ``row_idx`` (document indices, strictly increasing per column) and
    ``scores`` (float32 baked scores).  ``df[t]`` equals the extent length.
    Terms with zero document frequency are absent from the vocabulary.
    """

    col_ptr: np.ndarray
    row_idx: np.ndarray
    scores: np.ndarray
    vocab: dict[str, int]
    terms: list[str]
    df: np.ndarray
    doc_ids: list[str]
    num_docs: int
    avg_len: float
    k1: float
    b: float
    header: IndexHeader
    # Available after an in-process build; not serialized (scoring never reads it).
    doc_lens: np.ndarray | None = field(repr=False, default=None)

    @property
    def nnz(self) -> int:
        return int(self.scores.shape[0])

    @property
    def vocab_size(self) -> int:
        return len(self.terms)

    def column(self, term_id: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and scores of one vocabulary column (views)."""
        start, end = self.col_ptr[term_id], self.col_ptr[term_id + 1]
        return self.row_idx[start:end], self.scores[start:end]

    def check_invariants(self) -> None:
        """Raise AssertionError if the CSC structure is malformed."""
        assert self.col_ptr.shape == (self.vocab_size + 1,)
        assert self.col_ptr[0] == 0 and self.col_ptr[-1] == self.nnz
        assert np.all(np.diff(self.col_ptr) >= 1), "empty columns must not be stored"
        assert np.array_equal(self.df, np.diff(self.col_ptr))
        assert self.row_idx.shape[0] == self.nnz == self.scores.shape[0]
        for t in range(self.vocab_size):
            rows = self.row_idx[self.col_ptr[t]:self.col_ptr[t + 1]]
            assert np.all(np.diff(rows) > 0), f"column {t} rows not strictly increasing"
        assert np.all(np.isfinite(self.scores))
        assert self.row_idx.min(initial=0) >= 0
        assert self.row_idx.max(initial=-1) < self.num_docs
        assert len(self.doc_ids) == self.num_docs
        assert len(self.vocab) == self.vocab_size


def _tokenized_docs(corpus: Corpus, mode: TokenizerMode) -> tuple[list[Counter], np.ndarray]:
    counters: list[Counter] = []
    doc_lens = np.zeros(len(corpus), dtype=np.int64)
    for i, doc in enumerate(corpus):
        toks = tokenize(doc.text, mode)
        counters.append(Counter(toks))
        doc_lens[i] = len(toks)
    return counters, doc_lens


def _csc_structure(counters: list[Counter]) -> tuple[list[str], dict[str, int],
                                                     np.ndarray, np.ndarray,
                                                     np.ndarray, np.ndarray, np.ndarray]:
    """Assemble sorted-vocabulary CSC structure from per-document counts."""
    terms = sorted(set().union(*map(set, counters)) if counters else set())
    vocab = {t: i for i, t in enumerate(terms)}
    nnz = sum(len(c) for c in counters)
    tids = np.empty(nnz, dtype=np.int64)
    rows = np.empty(nnz, dtype=np.int32)
    tfs = np.empty(nnz, dtype=np.float64)
    pos = 0
    for d, counter in enumerate(counters):
        for term, tf in counter.items():
            tids[pos] = vocab[term]
            rows[pos] = d
            tfs[pos] = tf
            pos += 1
    # Entries were appended in ascending document order, so a stable sort by
    # term id leaves rows strictly increasing inside each column.
    order = np.argsort(tids, kind="stable")
    tids, rows, tfs = tids[order], rows[order], tfs[order]
    df = np.bincount(tids, minlength=len(terms)).astype(np.int64)
    col_ptr = np.zeros(len(terms) + 1, dtype=np.int64)
    np.cumsum(df, out=col_ptr[1:])
    return terms, vocab, tids, rows, tfs, df, col_ptr


def _tf_factor(tfs: np.ndarray, entry_doc_lens: np.ndarray, avg_len: float,
               k1: float, b: float) -> np.ndarray:
    return tfs * (k1 + 1.0) / (tfs + k1 * (1.0 - b + b * (entry_doc_lens / avg_len)))


def build_index(corpus: Corpus, mode: TokenizerMode,
                params: BuildParams | None = None) -> SparseScoreIndex:
    """Build a baked BM25 score index over ``corpus`` under ``mode``.

    Document length is the post-tokenization token count of the same
    stream that defines term frequencies.  Raises BuildError on an empty
    corpus or a corpus that tokenizes to nothing.
    """
    params = params or BuildParams()
    if len(corpus) == 0:
        raise BuildError("cannot build an index over an empty corpus")
    counters, doc_lens = _tokenized_docs(corpus, mode)
    total_tokens = int(doc_lens.sum())
    if total_tokens == 0:
        raise BuildError("corpus tokenized to zero tokens under mode " + mode.value)

    num_docs = len(corpus)
    avg_len = total_tokens / num_docs
    terms, vocab, tids, rows, tfs, df, col_ptr = _csc_structure(counters)

    idf = np.log(1.0 + (num_docs - df + 0.5) / (df + 0.5))
    entry_lens = doc_lens[rows].astype(np.float64)
    scores64 = idf[tids] * _tf_factor(tfs, entry_lens, avg_len, params.k1, params.b)
    return SparseScoreIndex(
        col_ptr=col_ptr,
        row_idx=rows,
        scores=scores64.astype(np.float32),
        vocab=vocab,
        terms=terms,
        df=df,
        doc_ids=corpus.doc_ids(),
        num_docs=num_docs,
        avg_len=avg_len,
        k1=params.k1,
        b=params.b,
        header=IndexHeader(mode=mode),
        doc_lens=doc_lens,
    )


def term_stats(index: SparseScoreIndex) -> tuple[np.ndarray, int, float]:
    """Read-only view of (df array, N, avg_len) for transforms and diagnostics."""
    df = index.df.view()
    df.flags.writeable = False
    return df, index.num_docs, index.avg_len
