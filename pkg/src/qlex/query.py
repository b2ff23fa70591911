"""Query-time scoring over baked score matrices.

One code path serves every index flavor (plain BM25, q-rescaled, gamma
sharpened, DPH): tokens select columns, column slices are summed into a
float64 accumulator, and ties are broken by ascending internal document
index so rankings are fully deterministic.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .corpus_io import QuerySet
from .errors import ModeMismatchError
from .index import SparseScoreIndex
from .tokenizers import TokenizerMode, tokenize

__all__ = ["RankedList", "score_query", "top_k", "batch_retrieve",
           "format_trec_run", "write_trec_run"]


@dataclass
class RankedList:
    """Descending-score ranking for one query."""

    query_id: str
    hits: list[tuple[str, float]]

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.hits]


def score_query(index: SparseScoreIndex, tokens: Sequence[str]) -> np.ndarray:
    """Dense float64 score vector over all documents.

    Token multiplicity counts: a token appearing twice contributes its
    column twice.  Tokens outside the vocabulary contribute nothing.
    """
    scores = np.zeros(index.num_docs, dtype=np.float64)
    col_ptr, row_idx, data = index.col_ptr, index.row_idx, index.scores
    for term, mult in Counter(tokens).items():
        tid = index.vocab.get(term)
        if tid is None:
            continue
        start, end = col_ptr[tid], col_ptr[tid + 1]
        contrib = data[start:end].astype(np.float64)
        if mult != 1:
            contrib *= mult
        scores[row_idx[start:end]] += contrib
    return scores


def rank_from_scores(index: SparseScoreIndex, scores: np.ndarray, k: int,
                     query_id: str = "") -> RankedList:
    """Top-k ranking from a dense score vector, ties by ascending doc index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    # Stable sort of the negated scores keeps original (ascending) document
    # order among equals, which is exactly the documented tie-break.
    order = np.argsort(-scores, kind="stable")[:k]
    return RankedList(query_id, [(index.doc_ids[i], float(scores[i])) for i in order])


def rank_tokens(index: SparseScoreIndex, tokens: Sequence[str], k: int,
                query_id: str = "") -> RankedList:
    """Rank pre-tokenized query tokens. Used by diagnostics that edit tokens."""
    return rank_from_scores(index, score_query(index, tokens), k, query_id)


def top_k(index: SparseScoreIndex, query_text: str, mode: TokenizerMode,
          k: int, query_id: str = "") -> RankedList:
    """Tokenize ``query_text`` under ``mode`` and rank the top ``k`` documents.

    ``mode`` must equal the mode the index was built with; the query side
    uses the same bundled stopword list as the build side.
    """
    if mode is not index.header.mode:
        raise ModeMismatchError(
            f"query mode {mode.value} does not match index mode {index.header.mode.value}")
    return rank_tokens(index, tokenize(query_text, mode), k, query_id)


def batch_retrieve(index: SparseScoreIndex, queries: QuerySet,
                   mode: TokenizerMode, k: int) -> list[RankedList]:
    """Rank every query in order; one RankedList per query."""
    return [top_k(index, text, mode, k, query_id=qid) for qid, text in queries]


def format_trec_run(rankings: Iterable[RankedList]) -> str:
    """TREC-style run rows: query_id, doc_id, rank (1-based), score. TSV."""
    lines = []
    for ranked in rankings:
        for rank, (doc_id, score) in enumerate(ranked.hits, start=1):
            lines.append(f"{ranked.query_id}\t{doc_id}\t{rank}\t{score:.6f}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_trec_run(rankings: Iterable[RankedList], out: str | Path | IO[str]) -> None:
    text = format_trec_run(rankings)
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
