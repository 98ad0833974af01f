"""Text normalisation shared by references and hypotheses.

Both sides of a comparison are NFC-normalised, case-folded with
``str.lower`` and split into word and punctuation tokens.  Punctuation is
the ASCII set plus the punctuation characters of the Unicode
General Punctuation block.  Apostrophes and hyphens between two word
characters stay inside the word, so ``don't`` and ``post-code`` are single
tokens.  Digits pass through untouched.

Reference text keeps its punctuation tokens; hypothesis text drops them,
mirroring an ASR pipeline that never emits punctuation.
"""
from __future__ import annotations

import re
import string
import unicodedata
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple

NORMALIZER_VERSION = "asrnoise-textnorm/1"


def _build_punct() -> str:
    chars = set(string.punctuation)
    for cp in range(0x2000, 0x2070):
        ch = chr(cp)
        if unicodedata.category(ch).startswith("P"):
            chars.add(ch)
    return "".join(sorted(chars))


PUNCTUATION = frozenset(_build_punct())
_JOINERS = "'’-"

_P = re.escape(_build_punct())
_WORD = rf"[^\s{_P}]+(?:[{re.escape(_JOINERS)}][^\s{_P}]+)*"
_TOKEN_RE = re.compile(rf"({_WORD})|([{_P}])")


@dataclass(frozen=True)
class Token:
    surface: str
    is_punct: bool

    def __str__(self) -> str:
        return self.surface


class Span(NamedTuple):
    """A token plus its character extent in the NFC form of the source text."""

    token: Token
    start: int
    end: int


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def make_token(surface: str) -> Token:
    s = nfc(surface.lower())
    return Token(s, all(ch in PUNCTUATION for ch in s))


def iter_spans(text: str) -> Iterator[Span]:
    """Yield reference tokens of ``nfc(text)`` with their offsets.

    Offsets index into ``nfc(text)``, not into ``text``; callers that splice
    rewritten tokens back into a sentence must work on the NFC string.
    """
    for m in _TOKEN_RE.finditer(nfc(text)):
        if m.group(1) is not None:
            surface = nfc(m.group(1).lower())
            yield Span(Token(surface, False), m.start(), m.end())
        else:
            yield Span(Token(m.group(2), True), m.start(), m.end())


def tokenize_reference(text: str) -> List[Token]:
    return [sp.token for sp in iter_spans(text)]


def tokenize_hypothesis(text: str) -> List[Token]:
    return [sp.token for sp in iter_spans(text) if not sp.token.is_punct]


def surfaces(tokens) -> List[str]:
    return [t.surface for t in tokens]


def normalize_text(text: str) -> str:
    """Space-joined reference token surfaces (a canonical string form)."""
    return " ".join(sp.token.surface for sp in iter_spans(text))
