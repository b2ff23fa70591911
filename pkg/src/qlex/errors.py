"""Exception types raised by the qlex library."""

from __future__ import annotations


class QlexError(Exception):
    """Base class for all qlex errors."""


class ParseError(QlexError):
    """A corpus, query, or qrels file could not be parsed.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class DuplicateIdError(ParseError):
    """An identifier that must be unique appeared more than once."""

    def __init__(self, kind: str, ident: str, *, path: str | None = None, line: int | None = None):
        self.ident = ident
        super().__init__(f"duplicate {kind} {ident!r}", path=path, line=line)


class BuildError(QlexError):
    """Index construction failed (empty corpus, no tokens, bad parameters)."""


class IndexFormatError(QlexError):
    """An index file is corrupt, truncated, or has an unsupported version."""


class RescaleStateError(QlexError):
    """An IDF transform was requested on an index whose state forbids it."""


class ModeMismatchError(QlexError):
    """Query tokenizer mode does not match the mode the index was built with."""
