"""Loading and validation of corpora, query sets, and relevance judgments.

Corpora and query sets are JSON Lines files (one object per line) with
``doc_id``/``text`` and ``query_id``/``text`` fields; a two-column TSV
corpus format is also accepted.  Qrels are whitespace-separated triples
``query_id  doc_id  relevance`` with non-negative integer relevance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import DuplicateIdError, ParseError

__all__ = [
    "Document", "Corpus", "QuerySet", "QrelSet",
    "load_corpus", "load_queries", "load_qrels",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


class Corpus:
    """An ordered collection of documents with unique, non-empty ids."""

    def __init__(self, documents: Iterable[Document]):
        self.docs: tuple[Document, ...] = tuple(documents)
        self._by_id: dict[str, int] = {}
        for i, doc in enumerate(self.docs):
            if not doc.doc_id:
                raise ParseError(f"document at position {i} has an empty doc_id")
            if doc.doc_id in self._by_id:
                raise DuplicateIdError("doc_id", doc.doc_id)
            self._by_id[doc.doc_id] = i

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.docs)

    def index_of(self, doc_id: str) -> int:
        return self._by_id[doc_id]

    def text(self, doc_id: str) -> str:
        return self.docs[self._by_id[doc_id]].text

    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.docs]


class QuerySet:
    """An ordered list of (query_id, text) pairs with unique ids."""

    def __init__(self, entries: Iterable[tuple[str, str]]):
        self.entries: tuple[tuple[str, str], ...] = tuple(entries)
        seen: set[str] = set()
        for qid, _ in self.entries:
            if not qid:
                raise ParseError("empty query_id")
            if qid in seen:
                raise DuplicateIdError("query_id", qid)
            seen.add(qid)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.entries)


@dataclass
class QrelSet:
    """Relevance judgments: query_id -> {doc_id -> relevance >= 0}.

    ``duplicates_replaced`` counts (query, doc) pairs that appeared more
    than once in the source file; the last value read wins.
    """

    judgments: dict[str, dict[str, int]] = field(default_factory=dict)
    duplicates_replaced: int = 0

    def for_query(self, query_id: str) -> Mapping[str, int]:
        return self.judgments.get(query_id, {})

    def relevant_docs(self, query_id: str) -> dict[str, int]:
        return {d: r for d, r in self.for_query(query_id).items() if r > 0}

    def has_relevant(self, query_id: str) -> bool:
        return any(r > 0 for r in self.for_query(query_id).values())


def _jsonl_records(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=str(path), line=lineno) from None
            if not isinstance(record, dict):
                raise ParseError("record is not a JSON object", path=str(path), line=lineno)
            yield lineno, record


def _require_str(record: dict, key: str, path: str, lineno: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise ParseError(f"missing or non-string field {key!r}", path=path, line=lineno)
    return value


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load a corpus from JSONL (doc_id/text fields) or two-column TSV."""
    path = Path(path)
    docs: list[Document] = []
    seen: dict[str, int] = {}

    def add(doc_id: str, text: str, lineno: int) -> None:
        if not doc_id:
            raise ParseError("empty doc_id", path=str(path), line=lineno)
        if doc_id in seen:
            raise DuplicateIdError("doc_id", doc_id, path=str(path), line=lineno)
        seen[doc_id] = lineno
        docs.append(Document(doc_id, text))

    if format == "jsonl":
        for lineno, record in _jsonl_records(path):
            add(_require_str(record, "doc_id", str(path), lineno),
                _require_str(record, "text", str(path), lineno), lineno)
    elif format == "tsv":
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                cols = line.split("\t", 1)
                if len(cols) != 2:
                    raise ParseError("expected 2 tab-separated columns", path=str(path), line=lineno)
                add(cols[0], cols[1], lineno)
    else:
        raise ValueError(f"unknown corpus format {format!r}; expected 'jsonl' or 'tsv'")
    return Corpus(docs)


def load_queries(path: str | Path) -> QuerySet:
    """Load a query set from JSONL with query_id/text fields."""
    path = Path(path)
    entries: list[tuple[str, str]] = []
    seen: set[str] = set()
    for lineno, record in _jsonl_records(path):
        qid = _require_str(record, "query_id", str(path), lineno)
        text = _require_str(record, "text", str(path), lineno)
        if qid in seen:
            raise DuplicateIdError("query_id", qid, path=str(path), line=lineno)
        seen.add(qid)
        entries.append((qid, text))
    return QuerySet(entries)


def load_qrels(path: str | Path) -> QrelSet:
    """Load qrels from whitespace-separated query_id/doc_id/relevance rows.

    Duplicate (query, doc) pairs keep the last value read; the number of
    replacements is recorded on the result and logged as a warning.
    Negative relevance is a parse error.
    """
    path = Path(path)
    judgments: dict[str, dict[str, int]] = {}
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cols = line.split()
            if len(cols) != 3:
                raise ParseError(f"expected 3 columns, got {len(cols)}", path=str(path), line=lineno)
            qid, doc_id, rel_text = cols
            try:
                rel = int(rel_text)
            except ValueError:
                raise ParseError(f"relevance {rel_text!r} is not an integer",
                                 path=str(path), line=lineno) from None
            if rel < 0:
                raise ParseError(f"negative relevance {rel} for ({qid}, {doc_id})",
                                 path=str(path), line=lineno)
            per_query = judgments.setdefault(qid, {})
            if doc_id in per_query:
                duplicates += 1
            per_query[doc_id] = rel
    if duplicates:
        log.warning("qrels %s: %d duplicate (query, doc) pairs replaced by last value",
                    path, duplicates)
    return QrelSet(judgments=judgments, duplicates_replaced=duplicates)
