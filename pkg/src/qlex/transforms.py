"""IDF transforms over baked score matrices.

The central object is the q-logarithm (Box-Cox / Tsallis deformation of the
natural log)::

    ln_q(x) = (x^(1-q) - 1) / (1 - q),      ln_1(x) = ln(x)

applied to the Robertson/Sparck-Jones relevance odds
``(N - n_t + 0.5) / (n_t + 0.5)``.  For q < 1 the transform follows a power
law in the odds and strongly amplifies rare terms; at q = 1 it recovers the
ordinary log IDF; for q > 1 it saturates at 1/(q - 1).

Because a built index stores ``lucene_idf * tf_factor`` per entry, moving
an index to a different exponent q is a pure column rescale: every entry of
column t is multiplied by ``idf_qlog(n_t, N, q) / idf_lucene(n_t, N)``.
The rescale is destructive and single-shot; the index header records it.
"""

from __future__ import annotations

import math

import numpy as np

from .corpus_io import Corpus
from .errors import BuildError, RescaleStateError
from .index import (SCORER_BM25, SCORER_DPH, IndexHeader, SparseScoreIndex,
                    _csc_structure, _tokenized_docs)
from .tokenizers import TokenizerMode

__all__ = [
    "LNQ_GUARD_EPS", "ln_q", "rsj_odds", "idf_qlog", "idf_lucene",
    "rescale_index", "rescale_index_gamma", "build_dph_index",
]

# Below this distance from q = 1 the closed form loses precision to
# cancellation; the exact limit ln(x) is used instead.
LNQ_GUARD_EPS = 1e-9


def ln_q(x: float, q: float) -> float:
    """q-logarithm of ``x`` (> 0). Continuous in q through q = 1."""
    if not (x > 0):
        raise ValueError(f"ln_q domain is x > 0, got {x}")
    if not math.isfinite(q):
        raise ValueError(f"q must be finite, got {q}")
    if abs(q - 1.0) < LNQ_GUARD_EPS:
        return math.log(x)
    return (x ** (1.0 - q) - 1.0) / (1.0 - q)


def _ln_q_vec(x: np.ndarray, q: float) -> np.ndarray:
    if abs(q - 1.0) < LNQ_GUARD_EPS:
        return np.log(x)
    return (np.power(x, 1.0 - q) - 1.0) / (1.0 - q)


def rsj_odds(n_t: int, num_docs: int, delta: float = 0.5) -> float:
    """Smoothed RSJ odds ``(N - n_t + delta) / (n_t + delta)``.

    Falls below 1 when the term occurs in more than half the corpus; the
    sign convention of the downstream log is kept deliberately.
    """
    if not 0 <= n_t <= num_docs:
        raise ValueError(f"n_t must lie in [0, N], got n_t={n_t}, N={num_docs}")
    return (num_docs - n_t + delta) / (n_t + delta)


def idf_qlog(n_t: int, num_docs: int, q: float) -> float:
    """q-log IDF: ``ln_q`` of the smoothed RSJ odds."""
    return ln_q(rsj_odds(n_t, num_docs), q)


def idf_lucene(n_t: int, num_docs: int) -> float:
    """Shifted log IDF ``log(1 + odds)``; strictly positive for df >= 1."""
    if not 1 <= n_t <= num_docs:
        raise ValueError(f"n_t must lie in [1, N], got n_t={n_t}, N={num_docs}")
    return math.log(1.0 + rsj_odds(n_t, num_docs))


def _require_pristine(index: SparseScoreIndex, what: str) -> None:
    header = index.header
    if header.scorer != SCORER_BM25:
        raise RescaleStateError(f"{what} applies to bm25 indexes only, "
                                f"this index was built with scorer={header.scorer!r}")
    if header.applied_q is not None:
        raise RescaleStateError(f"{what} refused: index already rescaled at q={header.applied_q}")
    if header.applied_gamma is not None:
        raise RescaleStateError(f"{what} refused: index already rescaled at "
                                f"gamma={header.applied_gamma}")


def rescale_index(index: SparseScoreIndex, q: float) -> SparseScoreIndex:
    """Move a baked BM25 index to exponent ``q`` by rescaling each column.

    At q = 1.0 exactly the matrix is returned untouched, bit for bit, and
    the header is not marked (the identity costs nothing and consumes no
    state).  Otherwise each stored entry of column t is multiplied by
    ``idf_qlog(n_t, N, q) / idf_lucene(n_t, N)``; ratios are computed once
    per column in float64 and the result is narrowed back to float32 in
    place.  One pass, O(|V| + nnz).  A second rescale is a state error.
    """
    if not math.isfinite(q):
        raise ValueError(f"q must be finite, got {q}")
    _require_pristine(index, "rescale")
    if q == 1.0:
        return index
    df = index.df.astype(np.float64)
    n = float(index.num_docs)
    odds = (n - df + 0.5) / (df + 0.5)
    ratios = _ln_q_vec(odds, q) / np.log(1.0 + odds)
    expanded = np.repeat(ratios, np.diff(index.col_ptr))
    rescaled = index.scores.astype(np.float64)
    rescaled *= expanded
    index.scores[...] = rescaled
    index.header.applied_q = q
    return index


def rescale_index_gamma(index: SparseScoreIndex, gamma: float) -> SparseScoreIndex:
    """Sharpen the baked IDF to ``idf ** gamma`` (column factor idf^(gamma-1)).

    gamma = 1.0 exactly is the untouched identity; gamma <= 0 is a domain
    error.  Same single-shot state rules as :func:`rescale_index`.
    """
    if not (math.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be finite and > 0, got {gamma}")
    _require_pristine(index, "gamma rescale")
    if gamma == 1.0:
        return index
    df = index.df.astype(np.float64)
    n = float(index.num_docs)
    idf = np.log(1.0 + (n - df + 0.5) / (df + 0.5))
    factors = np.power(idf, gamma - 1.0)
    expanded = np.repeat(factors, np.diff(index.col_ptr))
    rescaled = index.scores.astype(np.float64)
    rescaled *= expanded
    index.scores[...] = rescaled
    index.header.applied_gamma = gamma
    return index


def build_dph_index(corpus: Corpus, mode: TokenizerMode) -> SparseScoreIndex:
    """Build a parameter-free DPH score index (hypergeometric DFR model).

    Per stored entry, with ``f = tf/dl`` clamped to at most 1 - 1e-9,
    ``F`` the collection frequency of the term and ``norm = (1-f)^2/(tf+1)``::

        score = norm * (tf * log2((tf*avg_dl/dl) * (N/F))
                        + 0.5 * log2(2*pi*tf*(1-f)))

    Scores may be negative and are stored as computed.  The query path is
    identical to BM25 indexes; only the header's scorer tag differs.
    """
    if len(corpus) == 0:
        raise BuildError("cannot build an index over an empty corpus")
    counters, doc_lens = _tokenized_docs(corpus, mode)
    total_tokens = int(doc_lens.sum())
    if total_tokens == 0:
        raise BuildError("corpus tokenized to zero tokens under mode " + mode.value)

    num_docs = len(corpus)
    avg_len = total_tokens / num_docs
    terms, vocab, tids, rows, tfs, df, col_ptr = _csc_structure(counters)

    coll_freq = np.bincount(tids, weights=tfs, minlength=len(terms))
    dl = doc_lens[rows].astype(np.float64)
    f = np.minimum(tfs / dl, 1.0 - 1e-9)
    norm = (1.0 - f) ** 2 / (tfs + 1.0)
    info = tfs * np.log2((tfs * avg_len / dl) * (num_docs / coll_freq[tids]))
    scores64 = norm * (info + 0.5 * np.log2(2.0 * math.pi * tfs * (1.0 - f)))
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
        k1=math.nan,
        b=math.nan,
        header=IndexHeader(mode=mode, scorer=SCORER_DPH),
        doc_lens=doc_lens,
    )
