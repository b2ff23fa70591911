"""Tokenizer modes for code-oriented retrieval.

Four modes are provided:

* ``T0`` lowercases the text, extracts word-character runs of length >= 2,
  and drops stopwords.  No stemming.
* ``T1`` splits on whitespace only and lowercases; every token of length
  >= 1 is kept, stopwords included.
* ``T2`` extends T0: each extracted token is emitted whole, followed by its
  identifier sub-tokens (camelCase / snake_case / digit-boundary parts).
  Consecutive repeats inside one token's emission are collapsed so a token
  with no internal boundary is not double counted.
* ``T3`` emits only the sub-tokens; the whole token is kept just when it
  does not split.

Sub-token boundaries are computed from the original cased surface, since
lowercasing first would erase camelCase boundaries.
"""

from __future__ import annotations

import enum
import re
from functools import lru_cache
from importlib import resources
from typing import Collection, Iterable

__all__ = ["TokenizerMode", "tokenize", "split_identifier", "default_stopwords"]

# Word-character runs of length >= 2; underscores count as word characters,
# so snake_case survives extraction intact and is split later if requested.
_WORD_RE = re.compile(r"\b\w\w+\b")

# One alternative per identifier part kind: acronym run (stops before a
# trailing TitleCase word), TitleCase word, lowercase run, digit run.
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")

# Underscores and any non-word character act as hard separators.
_SEP_RE = re.compile(r"[\W_]+")


class TokenizerMode(enum.Enum):
    """Tokenization modes accepted by the index builder and query path."""

    T0 = "t0"
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"

    @classmethod
    def from_string(cls, name: str) -> "TokenizerMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown tokenizer mode {name!r}; expected one of "
                             f"{[m.value for m in cls]}") from None


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    """Load the bundled stopword list (33 common English function words)."""
    text = resources.files("qlex").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


def split_identifier(token: str) -> list[str]:
    """Split an identifier into lowercased parts.

    Boundaries: underscores and other non-word separators, lower-to-upper
    camelCase transitions, letter/digit transitions.  An acronym run splits
    before its last capital when followed by a lowercase letter, so
    ``HTTPServer`` gives ``[http, server]``.  Length-1 parts are kept.
    A token with no boundary comes back as a single lowercased part.
    """
    if not token:
        raise ValueError("cannot split an empty token")
    parts: list[str] = []
    for chunk in _SEP_RE.split(token):
        if not chunk:
            continue
        if chunk.isascii():
            parts.extend(m.group(0).lower() for m in _CAMEL_RE.finditer(chunk))
        else:
            # Non-ASCII identifiers are rare in code; keep the chunk whole.
            parts.append(chunk.lower())
    return parts


def _emit_t2(raw: str, whole: str, out: list[str]) -> None:
    # Whole token first, then parts, collapsing consecutive repeats within
    # this emission unit only (cross-token multiset counts are preserved).
    unit = [whole]
    for part in split_identifier(raw):
        if part != unit[-1]:
            unit.append(part)
    out.extend(unit)


def tokenize(text: str, mode: TokenizerMode,
             stopwords: Collection[str] | None = None) -> list[str]:
    """Tokenize ``text`` under the given mode.

    ``stopwords`` defaults to the bundled list; it applies to T0/T2/T3
    whole tokens only.  T1 never filters.  The returned tokens are
    lowercase and contain no whitespace.
    """
    if not isinstance(mode, TokenizerMode):
        raise TypeError(f"mode must be a TokenizerMode, got {type(mode).__name__}")
    if mode is TokenizerMode.T1:
        return text.lower().split()

    sw = default_stopwords() if stopwords is None else stopwords
    if mode is TokenizerMode.T0:
        return [m.group(0) for m in _WORD_RE.finditer(text.lower())
                if m.group(0) not in sw]

    out: list[str] = []
    for m in _WORD_RE.finditer(text):
        raw = m.group(0)
        whole = raw.lower()
        if whole in sw:
            continue
        if mode is TokenizerMode.T2:
            _emit_t2(raw, whole, out)
        else:  # T3: sub-tokens only; keep the whole token when it does not split
            parts = split_identifier(raw)
            out.extend(parts if len(parts) >= 2 else [whole])
    return out


def iter_token_streams(texts: Iterable[str], mode: TokenizerMode,
                       stopwords: Collection[str] | None = None):
    """Yield the token list for each text in order."""
    for text in texts:
        yield tokenize(text, mode, stopwords)
