"""Binary index serialization.

Layout (little-endian, version 1):

====================  =======================================================
bytes 0..7            magic ``b"QLEXIDX1"``
fixed header          ``<IBBddddQdQQ``: version, tokenizer mode ordinal,
                      scorer ordinal, k1, b, applied_q, applied_gamma
                      (NaN encodes "not applied"), N, avg_len, vocab size,
                      nnz
vocab block           u64 byte length + UTF-8 JSON array of terms (id order)
doc-id block          u64 byte length + UTF-8 JSON array of doc ids
col_ptr               (V + 1) int64
row_idx               nnz int32
scores                nnz float32
====================  =======================================================

Fixed-width header fields keep the file size independent of whether a
transform was applied, so a rescaled index is byte-for-byte the same size
as its baseline.  ``df`` is not stored; it is recomputed from ``col_ptr``.
"""

from __future__ import annotations

import io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import IndexFormatError
from .index import SCORER_BM25, SCORER_DPH, IndexHeader, SparseScoreIndex
from .tokenizers import TokenizerMode

__all__ = ["INDEX_FORMAT_VERSION", "save_index", "load_index", "dumps_index", "loads_index"]

INDEX_FORMAT_VERSION = 1
_MAGIC = b"QLEXIDX1"
_FIXED = struct.Struct("<IBBddddQdQQ")
_MODES = [TokenizerMode.T0, TokenizerMode.T1, TokenizerMode.T2, TokenizerMode.T3]
_SCORERS = [SCORER_BM25, SCORER_DPH]


def dumps_index(index: SparseScoreIndex) -> bytes:
    header = index.header
    fixed = _FIXED.pack(
        INDEX_FORMAT_VERSION,
        _MODES.index(header.mode),
        _SCORERS.index(header.scorer),
        index.k1,
        index.b,
        math.nan if header.applied_q is None else header.applied_q,
        math.nan if header.applied_gamma is None else header.applied_gamma,
        index.num_docs,
        index.avg_len,
        index.vocab_size,
        index.nnz,
    )
    vocab_blob = json.dumps(index.terms, ensure_ascii=False).encode("utf-8")
    ids_blob = json.dumps(index.doc_ids, ensure_ascii=False).encode("utf-8")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(fixed)
    buf.write(struct.pack("<Q", len(vocab_blob)))
    buf.write(vocab_blob)
    buf.write(struct.pack("<Q", len(ids_blob)))
    buf.write(ids_blob)
    buf.write(np.ascontiguousarray(index.col_ptr, dtype=np.int64).tobytes())
    buf.write(np.ascontiguousarray(index.row_idx, dtype=np.int32).tobytes())
    buf.write(np.ascontiguousarray(index.scores, dtype=np.float32).tobytes())
    return buf.getvalue()


def save_index(index: SparseScoreIndex, path: str | Path) -> None:
    Path(path).write_bytes(dumps_index(index))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(
                f"truncated index: needed {n} bytes at offset {self.pos}, "
                f"file holds {len(self.data)}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def array(self, dtype, count: int) -> np.ndarray:
        raw = self.take(count * np.dtype(dtype).itemsize)
        return np.frombuffer(raw, dtype=dtype).copy()


def loads_index(data: bytes) -> SparseScoreIndex:
    reader = _Reader(data)
    if reader.take(len(_MAGIC)) != _MAGIC:
        raise IndexFormatError("not a qlex index file (bad magic)")
    (version, mode_ord, scorer_ord, k1, b, applied_q, applied_gamma,
     num_docs, avg_len, vocab_size, nnz) = _FIXED.unpack(reader.take(_FIXED.size))
    if version != INDEX_FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format version {version}, "
                               f"this build reads version {INDEX_FORMAT_VERSION}")
    if not (0 <= mode_ord < len(_MODES) and 0 <= scorer_ord < len(_SCORERS)):
        raise IndexFormatError("corrupt header: unknown mode or scorer ordinal")

    (vocab_len,) = struct.unpack("<Q", reader.take(8))
    terms = json.loads(reader.take(vocab_len).decode("utf-8"))
    (ids_len,) = struct.unpack("<Q", reader.take(8))
    doc_ids = json.loads(reader.take(ids_len).decode("utf-8"))
    if len(terms) != vocab_size or len(doc_ids) != num_docs:
        raise IndexFormatError("corrupt index: block lengths disagree with header")

    col_ptr = reader.array(np.int64, vocab_size + 1)
    row_idx = reader.array(np.int32, nnz)
    scores = reader.array(np.float32, nnz)
    if reader.pos != len(data):
        raise IndexFormatError(f"{len(data) - reader.pos} trailing bytes after index payload")
    if col_ptr.shape[0] and (col_ptr[0] != 0 or col_ptr[-1] != nnz):
        raise IndexFormatError("corrupt index: col_ptr does not span the entry arrays")

    header = IndexHeader(
        mode=_MODES[mode_ord],
        scorer=_SCORERS[scorer_ord],
        applied_q=None if math.isnan(applied_q) else applied_q,
        applied_gamma=None if math.isnan(applied_gamma) else applied_gamma,
    )
    return SparseScoreIndex(
        col_ptr=col_ptr,
        row_idx=row_idx,
        scores=scores,
        vocab={t: i for i, t in enumerate(terms)},
        terms=terms,
        df=np.diff(col_ptr) if vocab_size else np.zeros(0, dtype=np.int64),
        doc_ids=doc_ids,
        num_docs=num_docs,
        avg_len=avg_len,
        k1=k1,
        b=b,
        header=header,
    )


def load_index(path: str | Path) -> SparseScoreIndex:
    return loads_index(Path(path).read_bytes())
