"""Shared fixtures and corpus builders."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from qlex import Corpus, Document, QrelSet, QuerySet
from qlex.tokenizers import TokenizerMode


def make_corpus(texts: list[str], prefix: str = "d") -> Corpus:
    return Corpus([Document(f"{prefix}{i}", t) for i, t in enumerate(texts)])


def random_corpus(rng: np.random.Generator, n_docs: int, vocab: int,
                  min_len: int = 3, max_len: int = 30) -> Corpus:
    words = [f"w{i}" for i in range(vocab)]
    texts = []
    for _ in range(n_docs):
        size = int(rng.integers(min_len, max_len + 1))
        texts.append(" ".join(rng.choice(words, size=size)))
    return make_corpus(texts)


def write_jsonl_corpus(path: Path, corpus: Corpus) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text}) + "\n")
    return path


def write_jsonl_queries(path: Path, entries: list[tuple[str, str]]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for qid, text in entries:
            fh.write(json.dumps({"query_id": qid, "text": text}) + "\n")
    return path


def write_qrels(path: Path, rows: list[tuple[str, str, int]]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for qid, doc_id, rel in rows:
            fh.write(f"{qid}\t{doc_id}\t{rel}\n")
    return path


def hapax_mechanism_corpus(n_docs: int = 1000, group_size: int = 100,
                           mids_per_group: int = 16, n_queries: int = 100,
                           ) -> tuple[Corpus, QuerySet, QrelSet]:
    """Synthetic corpus where gold documents are reachable only via a hapax.

    Documents form groups of ``group_size`` sharing ``mids_per_group``
    mid-frequency tokens (df = group_size); every document also carries a
    unique hapax token.  Query j pairs doc j's hapax with the mid tokens of
    the *next* group, so the gold document matches only on the hapax while
    ``group_size`` distractors match every mid token.  All documents have
    identical length, neutralizing length normalization.
    """
    n_groups = n_docs // group_size
    texts = []
    for d in range(n_docs):
        g = d // group_size
        mids = [f"mid{g}x{j}" for j in range(mids_per_group)]
        texts.append(" ".join([f"hapax{d}"] + mids))
    corpus = make_corpus(texts)
    queries = []
    qrel_rows = []
    for j in range(n_queries):
        g_other = (j // group_size + 1) % n_groups
        mids = [f"mid{g_other}x{i}" for i in range(mids_per_group)]
        queries.append((f"q{j}", " ".join([f"hapax{j}"] + mids)))
        qrel_rows.append((f"q{j}", f"d{j}", 1))
    qrels = QrelSet(judgments={q: {d: r} for q, d, r in qrel_rows})
    return corpus, QuerySet(queries), qrels


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # Stash phase reports on the item so teardown fixtures can see the
    # call outcome (used for the acceptance criteria PASS/FAIL lines).
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


@pytest.fixture
def t0() -> TokenizerMode:
    return TokenizerMode.T0


@pytest.fixture
def t1() -> TokenizerMode:
    return TokenizerMode.T1
